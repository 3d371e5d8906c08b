"""Command line entry points.

* serve          run the session API (mock backends by default)
* run            batch pipeline: portrait + text in, artifacts and report out
* qa             score an existing video bundle, report JSON to stdout
* mock-backends  serve the deterministic mocks over the envelope protocol
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .animation import DriveMethod
from .config import PipelineConfig, load_config
from .errors import AvatarKitError, InvalidInputError
from .media import decode_png, decode_wav, read_video_bundle_dir, decode_video_bundle
from .mocks import mock_suite
from .orchestrator import Orchestrator, Stage
from .quality import assess_quality, parse_report, report_to_json
from .report import write_report_files
from .media import write_video_bundle_dir

DEFAULT_TEXT = "hello digital human"


def _load_cli_config(path: str | None) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig()


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _load_cli_config(args.config)
    orchestrator = Orchestrator(config=config, root=args.store)
    app = create_app(orchestrator)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_mock_backends(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_mock_app

    app = create_mock_app(mock_suite())
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_cli_config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store_root = args.store or str(out_dir / "data")
    orchestrator = Orchestrator(config=config, root=store_root)

    session = orchestrator.create_session()
    sid = session.session_id
    orchestrator.submit_portrait(sid, decode_png(Path(args.portrait).read_bytes()))
    if args.audio:
        orchestrator.submit_audio(sid, decode_wav(Path(args.audio).read_bytes()))
    reply, _ = orchestrator.send_message(sid, args.text)

    orchestrator.run_stage(sid, Stage.AGES)
    select_params = {} if args.age_index is None else {"index": args.age_index}
    orchestrator.run_stage(sid, Stage.SELECT_APPEARANCE, select_params)
    if args.garment:
        orchestrator.run_stage(sid, Stage.DRESS, {"garment_id": args.garment})
    orchestrator.run_stage(sid, Stage.SPEAK)
    orchestrator.run_stage(sid, Stage.ANIMATE, {"method": args.method})
    if config.novel_view:
        orchestrator.run_stage(sid, Stage.NOVEL_VIEW)
    if config.style_id:
        orchestrator.run_stage(sid, Stage.STYLE)
    if config.sr_scale != 1:
        orchestrator.run_stage(sid, Stage.SUPER_RESOLVE)
    report_ref, _ = orchestrator.run_stage(sid, Stage.ASSESS)

    snapshot = orchestrator.session(sid).snapshot()
    manifest = orchestrator.manifest(sid).to_dict()
    (out_dir / "session.json").write_text(json.dumps(snapshot, indent=2) + "\n", "utf-8")
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", "utf-8")

    report = parse_report(orchestrator.store.get_bytes(report_ref))
    write_report_files(report, out_dir)

    final_name = [n for n in ("super_resolved", "styled", "novel_view", "animation")
                  if n in snapshot["artifacts"]][0]
    final_clip = orchestrator.store.get(orchestrator.store.resolve(snapshot["artifacts"][final_name]))
    write_video_bundle_dir(final_clip, out_dir / "video")

    print(f"reply\t{reply}")
    for name, artifact_id in snapshot["artifacts"].items():
        print(f"{name}\t{artifact_id}")
    print(f"cpbd\t{report.cpbd_mean:.4f}")
    for metric, value in report.normalized.items():
        print(f"{metric}\t{value:.4f}")
    print(f"out\t{out_dir}")
    return 0


def _cmd_qa(args: argparse.Namespace) -> int:
    path = Path(args.bundle)
    if path.is_dir():
        clip = read_video_bundle_dir(path)
    elif path.is_file():
        clip = decode_video_bundle(path.read_bytes())
    else:
        raise InvalidInputError(f"no video bundle at {path}")
    report = assess_quality(clip, [])
    sys.stdout.write(report_to_json(report).decode("utf-8"))
    if args.out_dir:
        write_report_files(report, Path(args.out_dir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avatarkit",
        description="Session-oriented digital human generation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session API server")
    serve.add_argument("--config", help="pipeline config JSON")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--store", default="avatarkit-data", help="artifact store root")
    serve.set_defaults(func=_cmd_serve)

    run = sub.add_parser("run", help="run the whole pipeline in batch")
    run.add_argument("--portrait", required=True, help="input portrait PNG")
    run.add_argument("--audio", help="optional target audio WAV (enables cloning)")
    run.add_argument("--text", default=DEFAULT_TEXT, help="user message for the chat round")
    run.add_argument("--config", help="pipeline config JSON")
    run.add_argument("--out-dir", default="avatarkit-out")
    run.add_argument("--store", help="artifact store root (default: <out-dir>/data)")
    run.add_argument("--age-index", type=int, help="age image to select (default: latest)")
    run.add_argument("--garment", help="garment id to dress with")
    run.add_argument(
        "--method",
        choices=[m.value for m in DriveMethod],
        default=DriveMethod.INDEPENDENT.value,
    )
    run.set_defaults(func=_cmd_run)

    qa = sub.add_parser("qa", help="score a video bundle (file or directory)")
    qa.add_argument("bundle")
    qa.add_argument("--out-dir", help="also write report.json, CSV, and figure here")
    qa.set_defaults(func=_cmd_qa)

    mock = sub.add_parser("mock-backends", help="serve deterministic mock backends")
    mock.add_argument("--host", default="127.0.0.1")
    mock.add_argument("--port", type=int, default=8100)
    mock.set_defaults(func=_cmd_mock_backends)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AvatarKitError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
