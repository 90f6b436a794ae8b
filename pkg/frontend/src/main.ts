import { HttpApiClient } from "./api";
import { render } from "./render";
import { AnnotationFlow } from "./state";

/** Browser bootstrap: renders into #app and wires events by delegation. */

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app container");

const flow = new AnnotationFlow(new HttpApiClient(""));

function paint(): void {
  root!.innerHTML = render(flow.state);
}

async function guard(action: () => Promise<void>): Promise<void> {
  try {
    await action();
  } catch (err) {
    flow.state.error = err instanceof Error ? err.message : String(err);
  }
  paint();
}

root.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.id === "consent") {
    const input = document.getElementById("annotator") as HTMLInputElement | null;
    const annotator = input?.value.trim() ?? "";
    if (annotator === "") return;
    void guard(() => flow.consent(annotator));
  } else if (target.id === "begin") {
    void guard(() => flow.beginLabeling());
  } else if (target.id === "submit") {
    event.preventDefault();
    void guard(() => flow.submit());
  }
});

root.addEventListener("change", (event) => {
  const target = event.target as HTMLInputElement;
  if (target.dataset.category) {
    flow.toggleCategory(target.dataset.category);
    paint();
  } else if (target.id === "none") {
    flow.toggleNone();
    paint();
  }
});

root.addEventListener("input", (event) => {
  const target = event.target as HTMLTextAreaElement;
  if (target.id === "comment") {
    flow.setComment(target.value);
  }
});

paint();
