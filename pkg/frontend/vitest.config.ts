import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["test/**/*.test.ts"],
    // the e2e suite boots the Python service once per run
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
