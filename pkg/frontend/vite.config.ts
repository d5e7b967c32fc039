import { defineConfig } from "vitest/config";

export default defineConfig({
  // Built assets are served by the session service's --static directory at
  // the site root, alongside /api; relative asset URLs keep that working
  // from any mount point.
  base: "./",
  build: {
    outDir: "dist",
    sourcemap: false,
    target: "es2022"
  },
  server: {
    // Dev convenience: `npm run dev` against a locally running session
    // service.
    proxy: { "/api": "http://localhost:8000" }
  },
  test: {
    environment: "happy-dom",
    include: ["test/**/*.test.ts"]
  }
});
