import { defineConfig } from "vite";

// served at /ui by the authoring service: assets must be relative
export default defineConfig({
  base: "./",
});
