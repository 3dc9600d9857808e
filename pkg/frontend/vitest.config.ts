import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // e2e spawns the campaign service and drives a full measurement batch
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
