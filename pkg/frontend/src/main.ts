import { IdeaRatingApp } from "./app.js";

// Module scripts are deferred, so this listener is registered before
// DOMContentLoaded fires.
document.addEventListener("DOMContentLoaded", () => {
  void new IdeaRatingApp().init();
});
