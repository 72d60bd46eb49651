import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // Same origin as the e2e test server so its fetches skip CORS checks.
    environmentOptions: {
      happyDOM: { url: "http://127.0.0.1:18791" },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
