import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the contract suite spawns the real trace service, give it headroom
    testTimeout: 20_000,
    hookTimeout: 20_000,
  },
});
