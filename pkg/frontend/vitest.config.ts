import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the round-trip suite builds a run directory and boots the rating
    // service in its hooks, which takes a while on a cold cache
    hookTimeout: 120_000,
    testTimeout: 30_000,
  },
});
