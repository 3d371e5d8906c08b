// Parser for the frame-bundle video container served by the artifact
// endpoint: a magic line, a JSON entry index line, then the entry bytes
// back to back. Frames are standalone PNGs, so a player needs no codec.

const MAGIC = "FRAMEBUNDLE/1\n";

export interface BundleEntry {
  name: string;
  size: number;
}

export interface FrameBundle {
  fps: number;
  frameCount: number;
  /** PNG bytes per frame, in frame order. */
  frames: Uint8Array[];
  /** WAV bytes when the clip carries audio. */
  audio: Uint8Array | null;
}

class BundleFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BundleFormatError";
  }
}

function findNewline(data: Uint8Array, from: number): number {
  for (let i = from; i < data.length; i++) {
    if (data[i] === 0x0a) return i;
  }
  return -1;
}

export function parseBundle(data: Uint8Array): FrameBundle {
  const ascii = new TextDecoder();
  if (
    data.length < MAGIC.length ||
    ascii.decode(data.subarray(0, MAGIC.length)) !== MAGIC
  ) {
    throw new BundleFormatError("missing frame-bundle magic");
  }

  const indexEnd = findNewline(data, MAGIC.length);
  if (indexEnd < 0) throw new BundleFormatError("missing entry index line");
  let entries: BundleEntry[];
  try {
    entries = JSON.parse(ascii.decode(data.subarray(MAGIC.length, indexEnd)));
  } catch {
    throw new BundleFormatError("entry index is not valid JSON");
  }
  if (!Array.isArray(entries)) {
    throw new BundleFormatError("entry index must be an array");
  }

  const contents = new Map<string, Uint8Array>();
  let offset = indexEnd + 1;
  for (const entry of entries) {
    if (
      typeof entry?.name !== "string" ||
      typeof entry?.size !== "number" ||
      !Number.isInteger(entry.size) ||
      entry.size < 0
    ) {
      throw new BundleFormatError("bad index entry");
    }
    if (offset + entry.size > data.length) {
      throw new BundleFormatError(`truncated entry ${entry.name}`);
    }
    contents.set(entry.name, data.subarray(offset, offset + entry.size));
    offset += entry.size;
  }
  if (offset !== data.length) {
    throw new BundleFormatError("trailing bytes after last entry");
  }

  const manifestBytes = contents.get("manifest.json");
  if (!manifestBytes) throw new BundleFormatError("bundle has no manifest.json");
  let manifest: { fps: number; frame_count: number; audio: string | null };
  try {
    manifest = JSON.parse(ascii.decode(manifestBytes));
  } catch {
    throw new BundleFormatError("manifest.json is not valid JSON");
  }
  if (
    typeof manifest.fps !== "number" ||
    !(manifest.fps > 0) ||
    !Number.isInteger(manifest.frame_count) ||
    manifest.frame_count < 1
  ) {
    throw new BundleFormatError("manifest fps/frame_count out of range");
  }

  const frames: Uint8Array[] = [];
  for (let i = 1; i <= manifest.frame_count; i++) {
    const name = `frame_${String(i).padStart(6, "0")}.png`;
    const frame = contents.get(name);
    if (!frame) throw new BundleFormatError(`missing ${name}`);
    frames.push(frame);
  }

  let audio: Uint8Array | null = null;
  if (manifest.audio !== null) {
    audio = contents.get(manifest.audio) ?? null;
    if (!audio) throw new BundleFormatError(`missing ${manifest.audio}`);
  }

  return { fps: manifest.fps, frameCount: manifest.frame_count, frames, audio };
}

/** data: URI for one PNG frame, usable as an img src without object URLs. */
export function pngDataUri(bytes: Uint8Array): string {
  let binary = "";
  const chunk = 0x2000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return `data:image/png;base64,${btoa(binary)}`;
}
