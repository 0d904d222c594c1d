// The single-page refinement app: describe a face, inspect the generated
// grid, select the closest variant, refine with a blend slider. All displayed
// facts come from API responses; this module only routes them into the DOM.

import {
  ApiError,
  pngDataUrl,
  type FacegenApi,
  type GenerationResult,
  type Lexicon,
} from "./api";
import {
  applyApiError,
  applyComposerText,
  applyNetworkError,
  applySessionState,
  canSubmit,
  currentStep,
  initialState,
  sessionOpen,
  type ViewState,
} from "./state";

export class App {
  state: ViewState = initialState();
  lexicon: Lexicon | null = null;

  constructor(
    private root: HTMLElement,
    private client: FacegenApi,
  ) {}

  async start(existingSessionId?: string): Promise<void> {
    this.renderSkeleton();
    try {
      const health = await this.client.health();
      this.root.querySelector("#health")!.textContent =
        `model ${health.model} · embedder ${health.embedder.name} (${health.embedder.dimension}d)`;
    } catch {
      this.root.querySelector("#health")!.textContent = "service unreachable";
    }
    try {
      this.lexicon = await this.client.lexicon();
      this.renderVocabulary();
    } catch {
      // vocabulary panel stays hidden; the composer still works
      this.root.querySelector<HTMLElement>("#vocabulary")!.hidden = true;
    }
    if (existingSessionId) {
      await this.reloadSession(existingSessionId);
    } else {
      const created = await this.client.createSession();
      this.state = applySessionState(this.state, await this.client.session(created.session_id));
    }
    this.render();
  }

  get sessionId(): string | null {
    return this.state.session?.session_id ?? null;
  }

  async reloadSession(sessionId: string): Promise<void> {
    this.state = applySessionState(this.state, await this.client.session(sessionId));
    this.render();
  }

  async submitDescription(): Promise<void> {
    if (!canSubmit(this.state) || this.sessionId === null) return;
    const { text, alpha, k, sigma } = this.state.composer;
    this.state = { ...this.state, pending: true };
    this.render();
    try {
      await this.client.addStep(this.sessionId, { text, alpha, k, sigma });
      const session = await this.client.session(this.sessionId);
      this.state = { ...applySessionState(this.state, session), pending: false };
    } catch (err) {
      if (err instanceof ApiError) {
        this.state = applyApiError(this.state, `${err.code}: ${err.message}`);
      } else {
        this.state = applyNetworkError(this.state, err instanceof Error ? err.message : String(err));
      }
    }
    this.render();
  }

  async selectVariant(stepIndex: number, variantIndex: number): Promise<void> {
    if (this.sessionId === null) return;
    try {
      await this.client.selectVariant(this.sessionId, stepIndex, variantIndex);
      const session = await this.client.session(this.sessionId);
      this.state = applySessionState(this.state, session);
    } catch (err) {
      if (err instanceof ApiError) {
        this.state = applyApiError(this.state, `${err.code}: ${err.message}`);
      } else {
        this.state = applyNetworkError(this.state, err instanceof Error ? err.message : String(err));
      }
    }
    this.render();
  }

  appendWord(word: string): void {
    const text = this.state.composer.text;
    const joined = text.length === 0 || text.endsWith(" ") ? text + word : `${text} ${word}`;
    this.state = applyComposerText(this.state, joined);
    this.render();
  }

  setText(text: string): void {
    this.state = applyComposerText(this.state, text);
    this.renderControls();
  }

  // -- rendering ------------------------------------------------------------

  renderSkeleton(): void {
    this.root.innerHTML = `
      <header>
        <h1>facegen refinement</h1>
        <span id="health"></span>
      </header>
      <div id="banner" class="banner" hidden></div>
      <main>
        <section id="composer">
          <textarea id="description" rows="3"
            placeholder="describe a face, e.g. an old man with short grey hair"></textarea>
          <div id="validation" class="validation" hidden></div>
          <label>keep selected face <input id="alpha" type="range" min="0" max="1" step="0.05" value="1">
            follow new description <span id="alpha-value">1.00</span></label>
          <label>variants <input id="k" type="number" min="1" max="32" value="6"></label>
          <label>noise <input id="sigma" type="number" min="0" max="2" step="0.05" value="0.1"></label>
          <button id="submit">generate</button>
          <div id="vocabulary"><h2>supported vocabulary</h2><div id="chips"></div></div>
        </section>
        <section id="result">
          <div id="base"></div>
          <div id="grid"></div>
        </section>
        <aside id="history"><h2>steps</h2><ol id="step-list"></ol></aside>
      </main>
    `;
    const textarea = this.root.querySelector<HTMLTextAreaElement>("#description")!;
    textarea.addEventListener("input", () => this.setText(textarea.value));
    const alpha = this.root.querySelector<HTMLInputElement>("#alpha")!;
    alpha.addEventListener("input", () => {
      this.state.composer.alpha = Number(alpha.value);
      this.root.querySelector("#alpha-value")!.textContent = Number(alpha.value).toFixed(2);
    });
    const k = this.root.querySelector<HTMLInputElement>("#k")!;
    k.addEventListener("input", () => (this.state.composer.k = Number(k.value)));
    const sigma = this.root.querySelector<HTMLInputElement>("#sigma")!;
    sigma.addEventListener("input", () => (this.state.composer.sigma = Number(sigma.value)));
    this.root.querySelector("#submit")!.addEventListener("click", () => void this.submitDescription());
  }

  renderVocabulary(): void {
    if (this.lexicon === null) return;
    const chips = this.root.querySelector<HTMLElement>("#chips")!;
    chips.innerHTML = "";
    const byChannel = new Map<string, Set<string>>();
    for (const entry of this.lexicon.entries) {
      for (const [channel] of entry.targets) {
        if (!byChannel.has(channel)) byChannel.set(channel, new Set());
        byChannel.get(channel)!.add(entry.phrase);
      }
    }
    for (const channel of this.lexicon.channels) {
      const phrases = byChannel.get(channel.name);
      if (!phrases) continue;
      const group = document.createElement("div");
      group.className = "chip-group";
      const label = document.createElement("span");
      label.className = "chip-label";
      label.textContent = channel.name.replace("_", " ");
      group.appendChild(label);
      for (const phrase of phrases) {
        const chip = document.createElement("button");
        chip.className = "chip";
        chip.textContent = phrase;
        chip.addEventListener("click", () => this.appendWord(phrase));
        group.appendChild(chip);
      }
      chips.appendChild(group);
    }
  }

  renderControls(): void {
    const submit = this.root.querySelector<HTMLButtonElement>("#submit")!;
    submit.disabled = !canSubmit(this.state);
    const validation = this.root.querySelector<HTMLElement>("#validation")!;
    validation.hidden = this.state.composer.validation === null;
    validation.textContent = this.state.composer.validation ?? "";
    const banner = this.root.querySelector<HTMLElement>("#banner")!;
    banner.hidden = this.state.banner === null;
    banner.textContent = this.state.banner ?? "";
    const alpha = this.root.querySelector<HTMLInputElement>("#alpha")!;
    alpha.value = String(this.state.composer.alpha);
    this.root.querySelector("#alpha-value")!.textContent = this.state.composer.alpha.toFixed(2);
  }

  render(): void {
    this.renderControls();
    const step = currentStep(this.state.session);
    const base = this.root.querySelector<HTMLElement>("#base")!;
    const grid = this.root.querySelector<HTMLElement>("#grid")!;
    base.innerHTML = "";
    grid.innerHTML = "";
    if (step?.base_image) {
      base.appendChild(this.resultCard(step.base_image, "current base", false));
    }
    if (step?.variant_images) {
      step.variant_images.forEach((variant, index) => {
        const card = this.resultCard(variant, `variant ${index}`, step.selected === index);
        card.addEventListener("click", () => void this.selectVariant(step.index, index));
        grid.appendChild(card);
      });
    }
    const list = this.root.querySelector<HTMLElement>("#step-list")!;
    list.innerHTML = "";
    for (const s of this.state.session?.steps ?? []) {
      const item = document.createElement("li");
      const selected = s.selected === null ? "no selection" : `selected variant ${s.selected}`;
      item.textContent = `${s.text} — alpha ${s.alpha.toFixed(2)}, ${selected}`;
      list.appendChild(item);
    }
    if (this.state.session && !sessionOpen(this.state)) {
      this.root.querySelector<HTMLButtonElement>("#submit")!.disabled = true;
    }
  }

  resultCard(result: GenerationResult, caption: string, selected: boolean): HTMLElement {
    const card = document.createElement("figure");
    card.className = selected ? "card selected" : "card";
    const img = document.createElement("img");
    img.src = pngDataUrl(result.image_png_b64);
    img.width = 96;
    img.height = 96;
    img.alt = caption;
    card.appendChild(img);
    const cap = document.createElement("figcaption");
    cap.textContent = caption;
    card.appendChild(cap);
    return card;
  }
}
