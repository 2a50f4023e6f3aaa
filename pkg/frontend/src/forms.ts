// Parameter forms for an expanded card. Field checking mirrors the server's
// schema rules via params.ts; a field in error never reaches the board
// state, it only parks an error message until the text is fixed.

import { checkParamText, constraintHint } from "./params.js";
import type { ParamSpecDoc } from "./types.js";

export interface FormCallbacks {
  /** Valid non-empty entry: store the explicit value. */
  setParam(name: string, value: unknown): void;
  /** Cleared entry: drop the explicit value, falling back to the default. */
  clearParam(name: string): void;
  /** Field validity changed; message is null once the field is clean. */
  setFieldError(name: string, message: string | null): void;
}

function defaultBadge(): HTMLElement {
  const badge = document.createElement("span");
  badge.className = "badge-default";
  badge.textContent = "default";
  return badge;
}

function fieldWrapper(spec: ParamSpecDoc): HTMLElement {
  const wrapper = document.createElement("div");
  wrapper.className = "param-field";
  wrapper.dataset.param = spec.name;

  const label = document.createElement("label");
  label.className = "param-label";
  label.textContent = spec.name;
  const hint = document.createElement("span");
  hint.className = "param-hint";
  hint.textContent = constraintHint(spec);
  label.appendChild(hint);
  wrapper.appendChild(label);
  return wrapper;
}

function showError(wrapper: HTMLElement, message: string | null): void {
  let box = wrapper.querySelector<HTMLElement>(".param-error");
  if (message === null) {
    box?.remove();
    wrapper.classList.remove("invalid");
    return;
  }
  if (!box) {
    box = document.createElement("div");
    box.className = "param-error";
    wrapper.appendChild(box);
  }
  box.textContent = message;
  wrapper.classList.add("invalid");
}

function syncBadge(wrapper: HTMLElement, isDefault: boolean): void {
  const existing = wrapper.querySelector(".badge-default");
  if (isDefault && !existing) {
    wrapper.querySelector(".param-label")?.appendChild(defaultBadge());
  } else if (!isDefault && existing) {
    existing.remove();
  }
}

function textField(spec: ParamSpecDoc, explicit: unknown | undefined,
                   callbacks: FormCallbacks): HTMLElement {
  const wrapper = fieldWrapper(spec);
  const input = document.createElement("input");
  input.type = "text";
  input.className = "param-input";
  input.placeholder = String(spec.default);
  if (explicit !== undefined) input.value = String(explicit);
  syncBadge(wrapper, explicit === undefined);

  input.addEventListener("input", () => {
    const text = input.value;
    if (text.trim() === "") {
      callbacks.clearParam(spec.name);
      callbacks.setFieldError(spec.name, null);
      showError(wrapper, null);
      syncBadge(wrapper, true);
      return;
    }
    const verdict = checkParamText(spec, text);
    if (verdict.ok) {
      callbacks.setParam(spec.name, verdict.value);
      callbacks.setFieldError(spec.name, null);
      showError(wrapper, null);
      syncBadge(wrapper, false);
    } else {
      // invalid text stays out of the board; save is blocked via the error
      callbacks.setFieldError(spec.name, verdict.message);
      showError(wrapper, verdict.message);
      syncBadge(wrapper, false);
    }
  });
  wrapper.appendChild(input);
  return wrapper;
}

function selectField(spec: ParamSpecDoc, options: string[],
                     explicit: unknown | undefined,
                     callbacks: FormCallbacks): HTMLElement {
  const wrapper = fieldWrapper(spec);
  const select = document.createElement("select");
  select.className = "param-input";

  const defaultOption = document.createElement("option");
  defaultOption.value = "";
  defaultOption.textContent = `(default: ${spec.default})`;
  select.appendChild(defaultOption);
  for (const choice of options) {
    const option = document.createElement("option");
    option.value = choice;
    option.textContent = choice;
    select.appendChild(option);
  }
  if (explicit !== undefined) select.value = String(explicit);
  syncBadge(wrapper, explicit === undefined);

  select.addEventListener("change", () => {
    if (select.value === "") {
      callbacks.clearParam(spec.name);
      syncBadge(wrapper, true);
    } else {
      const verdict = checkParamText(spec, select.value);
      if (verdict.ok) callbacks.setParam(spec.name, verdict.value);
      syncBadge(wrapper, false);
    }
    callbacks.setFieldError(spec.name, null);
    showError(wrapper, null);
  });
  wrapper.appendChild(select);
  return wrapper;
}

/**
 * Build the form for one card. `explicitParams` holds only values the user
 * set; everything else shows its manifest default with a badge.
 */
export function renderParamForm(specs: readonly ParamSpecDoc[],
                                explicitParams: Record<string, unknown>,
                                callbacks: FormCallbacks): HTMLElement {
  const form = document.createElement("div");
  form.className = "param-form";
  if (specs.length === 0) {
    const empty = document.createElement("div");
    empty.className = "param-none";
    empty.textContent = "no parameters";
    form.appendChild(empty);
    return form;
  }
  for (const spec of specs) {
    const explicit = Object.prototype.hasOwnProperty.call(explicitParams, spec.name)
      ? explicitParams[spec.name] : undefined;
    if (spec.type === "enum") {
      form.appendChild(selectField(spec, spec.choices ?? [], explicit, callbacks));
    } else if (spec.type === "bool") {
      form.appendChild(selectField(spec, ["true", "false"], explicit, callbacks));
    } else {
      form.appendChild(textField(spec, explicit, callbacks));
    }
  }
  return form;
}

/** Highlight one field with a server-reported message (422 routing). */
export function flagServerError(form: HTMLElement, paramName: string,
                                message: string): boolean {
  const wrapper = form.querySelector<HTMLElement>(
    `.param-field[data-param="${paramName}"]`);
  if (!wrapper) return false;
  showError(wrapper, message);
  return true;
}
