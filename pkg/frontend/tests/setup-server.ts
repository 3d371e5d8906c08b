// Boots the real pipeline service (with its deterministic mock backends)
// once for the whole test run. Tests talk to it over plain HTTP.
import { spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { TestProject } from "vitest/node";

declare module "vitest" {
  export interface ProvidedContext {
    apiBase: string;
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        probe.close(() => reject(new Error("could not allocate a port")));
        return;
      }
      const port = address.port;
      probe.close(() => resolve(port));
    });
  });
}

export default async function setup(project: TestProject): Promise<() => Promise<void>> {
  const port = await freePort();
  const store = mkdtempSync(join(tmpdir(), "avatarkit-console-"));
  const repoRoot = join(dirname(fileURLToPath(import.meta.url)), "..", "..");
  const child = spawn(
    "python3",
    ["-m", "avatarkit.cli", "serve", "--port", String(port), "--store", store],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  let log = "";
  child.stdout?.on("data", (chunk) => (log += chunk));
  child.stderr?.on("data", (chunk) => (log += chunk));

  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 45_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`pipeline service exited during startup:\n${log}`);
    }
    try {
      const response = await fetch(`${base}/healthz`);
      if (response.ok) break;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      child.kill("SIGKILL");
      throw new Error(`pipeline service never became healthy:\n${log}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }

  project.provide("apiBase", base);

  return async () => {
    child.kill("SIGTERM");
    await new Promise<void>((resolve) => {
      const hardKill = setTimeout(() => {
        child.kill("SIGKILL");
        resolve();
      }, 3_000);
      child.once("exit", () => {
        clearTimeout(hardKill);
        resolve();
      });
    });
    rmSync(store, { recursive: true, force: true });
  };
}
