import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
    // The round-trip test boots a real HTTP service; keep files sequential
    // so two test files never race for the same fixture directory.
    fileParallelism: false,
  },
});
