import { pngDataUri, type FrameBundle } from "./bundle.js";

/**
 * Plays a parsed frame bundle by swapping data-URI frames into one <img>
 * on a timer at the clip's frame rate. No video codec involved.
 */
export class FramePlayer {
  private frameUris: string[];
  private index = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly img: HTMLImageElement,
    private readonly bundle: FrameBundle,
  ) {
    this.frameUris = bundle.frames.map(pngDataUri);
    this.showFrame(0);
  }

  get fps(): number {
    return this.bundle.fps;
  }

  get frameIndex(): number {
    return this.index;
  }

  get playing(): boolean {
    return this.timer !== null;
  }

  private showFrame(i: number): void {
    this.index = i;
    const uri = this.frameUris[i];
    if (uri !== undefined) this.img.src = uri;
  }

  play(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => {
      this.showFrame((this.index + 1) % this.frameUris.length);
    }, 1000 / this.bundle.fps);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
