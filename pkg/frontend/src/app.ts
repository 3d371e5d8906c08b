import { ApiFault, Client } from "./api.js";
import { parseBundle } from "./bundle.js";
import { FramePlayer } from "./player.js";
import type { GarmentEntry, QualityReport, Snapshot, StageName } from "./types.js";

const VIDEO_ARTIFACTS = ["animation", "novel_view", "styled", "super_resolved"];
const DRIVE_METHODS = ["independent", "dependent_retarget"] as const;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

/**
 * Session console: a stateless mirror of one pipeline session. Every view
 * is rebuilt from a fresh GET of the session snapshot; user actions POST
 * to the service and then refetch. Nothing is computed client-side.
 */
export class Console {
  readonly client: Client;
  private readonly root: HTMLElement;
  private sessionId: string | null = null;
  private snapshot: Snapshot | null = null;
  private report: QualityReport | null = null;
  private lastError: string | null = null;
  private garmentList: GarmentEntry[] = [];
  private players: FramePlayer[] = [];
  private work: Promise<void> = Promise.resolve();

  constructor(root: HTMLElement, client: Client) {
    this.root = root;
    this.client = client;
  }

  /** Create a new session, or attach to an existing one, and render it. */
  async start(sessionId?: string): Promise<void> {
    if (sessionId === undefined) {
      const handle = await this.client.createSession();
      this.sessionId = handle.session_id;
    } else {
      this.sessionId = sessionId;
    }
    this.garmentList = await this.client.garments();
    await this.refresh();
  }

  get session(): string {
    if (this.sessionId === null) throw new Error("console not started");
    return this.sessionId;
  }

  /** Resolves once every queued user action has completed. */
  flush(): Promise<void> {
    return this.work;
  }

  private enqueue(action: () => Promise<void>): void {
    this.work = this.work.then(async () => {
      try {
        await action();
        this.lastError = null;
      } catch (err) {
        if (err instanceof ApiFault) {
          this.lastError = `${err.code}: ${err.detail}`;
        } else {
          this.lastError = `error: ${String(err)}`;
        }
      }
      await this.refresh();
    });
  }

  async refresh(): Promise<void> {
    const snapshot = await this.client.getSession(this.session);
    const reportId = snapshot.artifacts["report"];
    this.report = reportId ? await this.client.fetchReport(reportId) : null;
    this.snapshot = snapshot;
    this.render();
  }

  get state(): string {
    return this.snapshot?.state ?? "";
  }

  private runStage(stage: StageName, params: Record<string, unknown> = {}): void {
    this.enqueue(async () => {
      await this.client.runStage(this.session, stage, params);
    });
  }

  private render(): void {
    const snap = this.snapshot;
    if (!snap) return;
    for (const player of this.players) player.stop();
    this.players = [];
    this.root.replaceChildren(
      this.renderHeader(snap),
      ...this.renderError(),
      this.renderChat(snap),
      this.renderInputs(snap),
      this.renderAges(snap),
      this.renderGarments(snap),
      this.renderStageControls(snap),
      this.renderReport(),
      this.renderArtifacts(snap),
      this.renderFlags(snap),
    );
  }

  private renderHeader(snap: Snapshot): HTMLElement {
    return el(
      "header",
      {},
      el("h1", {}, "avatarkit console"),
      el("p", {}, "session ", el("code", { id: "session-id" }, snap.session_id)),
      el("p", {}, "state ", el("strong", { id: "state-badge" }, snap.state)),
    );
  }

  private renderError(): HTMLElement[] {
    if (this.lastError === null) return [];
    return [el("div", { id: "error-banner", class: "error" }, this.lastError)];
  }

  private renderChat(snap: Snapshot): HTMLElement {
    const rounds = snap.transcript.map((round) =>
      el(
        "li",
        { "data-round": String(round.index) },
        el("span", { class: "user" }, round.user),
        el("span", { class: "reply" }, round.reply),
      ),
    );
    const input = el("input", { id: "chat-input", type: "text" });
    const send = el("button", { id: "chat-send", type: "button" }, "Send");
    send.addEventListener("click", () => {
      const text = input.value;
      this.enqueue(async () => {
        await this.client.sendMessage(this.session, text);
      });
    });
    return el(
      "section",
      { id: "chat" },
      el("h2", {}, "Conversation"),
      el("ol", { class: "transcript" }, ...rounds),
      el("div", {}, input, send),
    );
  }

  private renderInputs(snap: Snapshot): HTMLElement {
    const portrait = el("input", { id: "portrait-file", type: "file", accept: "image/png" });
    portrait.addEventListener("change", () => {
      const file = portrait.files?.[0];
      if (file) this.uploadPortraitFile(file);
    });
    const audio = el("input", { id: "audio-file", type: "file", accept: "audio/wav" });
    audio.addEventListener("change", () => {
      const file = audio.files?.[0];
      if (file) this.uploadAudioFile(file);
    });
    const children: (Node | string)[] = [
      el("h2", {}, "Inputs"),
      el("label", {}, "portrait ", portrait),
      el("label", {}, "voice sample ", audio),
    ];
    const portraitId = snap.inputs["portrait"];
    if (portraitId) {
      children.push(
        el("img", {
          class: "portrait-thumb",
          src: this.client.artifactUrl(portraitId),
          alt: "portrait",
        }),
      );
    }
    const audioId = snap.inputs["target_audio"];
    if (audioId) {
      children.push(
        el(
          "a",
          { class: "audio-link", href: this.client.artifactUrl(audioId) },
          "voice sample",
        ),
      );
    }
    return el("section", { id: "inputs" }, ...children);
  }

  private uploadPortraitFile(file: Blob): void {
    this.enqueue(async () => {
      const bytes = new Uint8Array(await file.arrayBuffer());
      await this.client.uploadPortrait(this.session, bytes);
    });
  }

  private uploadAudioFile(file: Blob): void {
    this.enqueue(async () => {
      const bytes = new Uint8Array(await file.arrayBuffer());
      await this.client.uploadAudio(this.session, bytes);
    });
  }

  /** Scripted upload entry points; the file inputs funnel into the same calls. */
  uploadPortraitBytes(bytes: Uint8Array): void {
    this.enqueue(async () => {
      await this.client.uploadPortrait(this.session, bytes);
    });
  }

  uploadAudioBytes(bytes: Uint8Array): void {
    this.enqueue(async () => {
      await this.client.uploadAudio(this.session, bytes);
    });
  }

  private renderAges(snap: Snapshot): HTMLElement {
    const pickedIndex = snap.selections["age_index"];
    const strip = snap.ages.map((entry, i) => {
      const classes = ["age-option"];
      if (pickedIndex === i) classes.push("picked");
      const button = el(
        "button",
        { class: classes.join(" "), type: "button", "data-index": String(i) },
        el("img", {
          src: this.client.artifactUrl(entry.artifact_id),
          alt: `age ${entry.age}`,
        }),
        el("span", {}, String(entry.age)),
      );
      button.addEventListener("click", () => {
        this.runStage("SelectAppearance", { index: i });
      });
      return button;
    });
    const generate = el("button", { id: "ages-btn", type: "button" }, "Generate ages");
    generate.addEventListener("click", () => this.runStage("Ages"));
    const children: (Node | string)[] = [
      el("h2", {}, "Appearance"),
      generate,
      el("div", { class: "age-strip" }, ...strip),
    ];
    if (snap.selected) {
      children.push(
        el("img", {
          class: "selected-appearance",
          src: this.client.artifactUrl(snap.selected),
          alt: "selected appearance",
        }),
      );
    }
    return el("section", { id: "appearance" }, ...children);
  }

  private renderGarments(snap: Snapshot): HTMLElement {
    const gallery = el("div", { class: "garment-gallery" });
    for (const garment of this.garmentList) {
      const classes = ["garment-option"];
      if (snap.selections["garment_id"] === garment.garment_id) {
        classes.push("picked");
      }
      const button = el(
        "button",
        {
          class: classes.join(" "),
          type: "button",
          "data-garment": garment.garment_id,
        },
        el("img", {
          src: this.client.artifactUrl(garment.artifact_id),
          alt: garment.label,
        }),
        el("span", {}, garment.label),
      );
      button.addEventListener("click", () => {
        this.runStage("Dress", { garment_id: garment.garment_id });
      });
      gallery.append(button);
    }
    return el("section", { id: "garments" }, el("h2", {}, "Garments"), gallery);
  }

  private renderStageControls(snap: Snapshot): HTMLElement {
    const speak = el("button", { id: "speak-btn", type: "button" }, "Speak");
    speak.addEventListener("click", () => this.runStage("Speak"));

    const chosenMethod =
      (snap.selections["drive_method"] as string | undefined) ?? "independent";
    const radios: HTMLElement[] = [];
    for (const method of DRIVE_METHODS) {
      const attrs: Record<string, string> = {
        type: "radio",
        name: "drive-method",
        id: `method-${method}`,
        value: method,
      };
      if (method === chosenMethod) attrs["checked"] = "";
      const radio = el("input", attrs);
      radios.push(el("label", {}, radio, method));
    }

    // the one piece of client-side gating: animation needs synthesized speech
    const canAnimate = snap.state === "SpeechReady" || snap.state === "Animated";
    const animateAttrs: Record<string, string> = { id: "animate-btn", type: "button" };
    if (!canAnimate) animateAttrs["disabled"] = "";
    const animate = el("button", animateAttrs, "Animate");
    animate.addEventListener("click", () => {
      if (animate.hasAttribute("disabled")) return;
      this.runStage("Animate", { method: this.currentMethod() });
    });

    const novelView = el("button", { id: "novelview-btn", type: "button" }, "Novel view");
    novelView.addEventListener("click", () => this.runStage("NovelView"));
    const style = el("button", { id: "style-btn", type: "button" }, "Style");
    style.addEventListener("click", () => this.runStage("Style"));
    const sr = el("button", { id: "sr-btn", type: "button" }, "Super-resolve");
    sr.addEventListener("click", () => this.runStage("SuperResolve"));
    const assess = el("button", { id: "assess-btn", type: "button" }, "Assess");
    assess.addEventListener("click", () => this.runStage("Assess"));

    return el(
      "section",
      { id: "stages" },
      el("h2", {}, "Pipeline"),
      el("div", {}, speak),
      el("div", { class: "methods" }, ...radios),
      el("div", {}, animate),
      el("div", {}, novelView, style, sr, assess),
    );
  }

  private currentMethod(): string {
    for (const method of DRIVE_METHODS) {
      const radio = this.root.querySelector<HTMLInputElement>(`#method-${method}`);
      if (radio?.checked) return method;
    }
    return "independent";
  }

  private renderReport(): HTMLElement {
    const section = el("section", { id: "report" }, el("h2", {}, "Quality report"));
    const report = this.report;
    if (!report) return section;
    const rows = [
      el(
        "tr",
        {},
        el("td", {}, "CPBD"),
        el("td", { class: "metric-value", "data-metric": "CPBD" }, report.cpbd.toFixed(4)),
      ),
    ];
    for (const [metric, value] of Object.entries(report.normalized)) {
      rows.push(
        el(
          "tr",
          {},
          el("td", {}, metric),
          el("td", { class: "metric-value", "data-metric": metric }, value.toFixed(4)),
        ),
      );
    }
    const table = el(
      "table",
      { id: "report-table" },
      el("tr", {}, el("th", {}, "metric"), el("th", {}, "value")),
      ...rows,
    );
    section.append(table);
    if (report.flags.length > 0) {
      section.append(
        el(
          "ul",
          { class: "report-flags" },
          ...report.flags.map((flag) => el("li", {}, flag)),
        ),
      );
    }
    return section;
  }

  private renderArtifacts(snap: Snapshot): HTMLElement {
    const items: HTMLElement[] = [];
    for (const [name, artifactId] of Object.entries(snap.artifacts)) {
      const item = el(
        "li",
        { class: "artifact-row", "data-name": name },
        el("span", { class: "artifact-name" }, name),
        " ",
        el("a", { href: this.client.artifactUrl(artifactId) }, artifactId),
      );
      if (VIDEO_ARTIFACTS.includes(name)) {
        item.append(this.renderPreview(name, artifactId));
      }
      items.push(item);
    }
    return el(
      "section",
      { id: "artifacts" },
      el("h2", {}, "Artifacts"),
      el("ul", { class: "artifact-list" }, ...items),
    );
  }

  private renderPreview(name: string, artifactId: string): HTMLElement {
    const img = el("img", { class: "frame", alt: `${name} preview` });
    const play = el("button", { class: "play-btn", type: "button" }, "Play");
    const stop = el("button", { class: "stop-btn", type: "button" }, "Stop");
    let player: FramePlayer | null = null;
    play.addEventListener("click", () => {
      this.enqueueLocal(async () => {
        if (player === null) {
          const bytes = await this.client.fetchArtifact(artifactId);
          player = new FramePlayer(img, parseBundle(bytes));
          this.players.push(player);
        }
        player.play();
      });
    });
    stop.addEventListener("click", () => player?.stop());
    return el("div", { class: "preview", "data-artifact": artifactId }, play, stop, img);
  }

  // playback is view-local: no session mutation, so no snapshot refetch
  private enqueueLocal(action: () => Promise<void>): void {
    this.work = this.work.then(() =>
      action().catch((err) => {
        this.lastError = `error: ${String(err)}`;
      }),
    );
  }

  private renderFlags(snap: Snapshot): HTMLElement {
    return el(
      "section",
      { id: "flags" },
      el("h2", {}, "Flags"),
      el("ul", {}, ...snap.flags.map((flag) => el("li", {}, flag))),
    );
  }
}
