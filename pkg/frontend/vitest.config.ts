import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    globalSetup: ["./tests/setup-server.ts"],
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
