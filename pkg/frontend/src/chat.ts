/**
 * Chat with a forged character: session flow plus a thin DOM view.
 *
 * The controller holds no DOM so the same code path drives both the page
 * and headless tests against a live service.
 */

import type {
  ApiClient,
  CharacterRecord,
  Catalog,
  SessionCreated,
  SessionStatus,
} from "./api.js";

export interface ChatEntry {
  who: "user" | "agent";
  text: string;
}

export class ChatController {
  sessionId: string | null = null;
  status: SessionStatus | null = null;
  history: ChatEntry[] = [];

  constructor(private readonly api: ApiClient) {}

  private get openId(): string {
    if (!this.sessionId) throw new Error("no open session");
    return this.sessionId;
  }

  async open(
    characterId: string,
    status: Partial<SessionStatus> = {},
  ): Promise<SessionCreated> {
    const created = await this.api.createSession(characterId, status);
    this.sessionId = created.session_id;
    this.status = created.status;
    this.history = [];
    return created;
  }

  async resume(sessionId: string): Promise<void> {
    const transcript = await this.api.getTranscript(sessionId);
    this.sessionId = transcript.session_id;
    this.status = transcript.status;
    this.history = transcript.history.slice();
  }

  async send(text: string): Promise<string> {
    const { reply } = await this.api.sendMessage(this.openId, text);
    this.history.push({ who: "user", text }, { who: "agent", text: reply });
    return reply;
  }

  async sendStreaming(
    text: string,
    onChunk: (chunk: string) => void,
  ): Promise<string> {
    const reply = await this.api.streamMessage(this.openId, text, onChunk);
    this.history.push({ who: "user", text }, { who: "agent", text: reply });
    return reply;
  }

  /** Change location, doing, emotion or topic mid-conversation. */
  async steer(patch: Partial<SessionStatus>): Promise<SessionStatus> {
    const transcript = await this.api.patchStatus(this.openId, patch);
    this.status = transcript.status;
    return transcript.status;
  }
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className = "", text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export class ChatView {
  readonly controller: ChatController;
  readonly characterSelect: HTMLSelectElement;
  readonly thread: HTMLElement;
  readonly input: HTMLInputElement;
  readonly emotionSelect: HTMLSelectElement;
  readonly topicSelect: HTMLSelectElement;

  constructor(
    root: HTMLElement,
    private readonly api: ApiClient,
    catalog: Catalog,
  ) {
    this.controller = new ChatController(api);

    const top = el("div", "chat-top");
    this.characterSelect = document.createElement("select");
    const openButton = el("button", "", "Open session");
    openButton.addEventListener("click", () => void this.openSession());
    top.append(this.characterSelect, openButton);

    this.thread = el("div", "thread");

    const composer = el("div", "composer");
    this.input = document.createElement("input");
    this.input.placeholder = "Say something";
    const sendButton = el("button", "", "Send");
    sendButton.addEventListener("click", () => void this.sendCurrent());
    this.input.addEventListener("keydown", (e) => {
      if (e.key === "Enter") void this.sendCurrent();
    });
    composer.append(this.input, sendButton);

    const steering = el("div", "steering");
    this.emotionSelect = document.createElement("select");
    for (const label of catalog.emotions) {
      this.emotionSelect.appendChild(new Option(label, label));
    }
    this.topicSelect = document.createElement("select");
    for (const label of catalog.topics) {
      this.topicSelect.appendChild(new Option(label, label));
    }
    const steerButton = el("button", "", "Apply status");
    steerButton.addEventListener("click", () => void this.applySteering());
    steering.append(
      el("span", "", "Emotion"), this.emotionSelect,
      el("span", "", "Topic"), this.topicSelect,
      steerButton,
    );

    root.append(top, this.thread, composer, steering);
  }

  async refreshCharacters(): Promise<void> {
    const characters = await this.api.listCharacters();
    this.characterSelect.replaceChildren(
      ...characters.map(
        (c: CharacterRecord) => new Option(`${c.profile.name} (${c.id})`, c.id),
      ),
    );
  }

  private bubble(entry: ChatEntry): HTMLElement {
    return el("p", `bubble ${entry.who}`, entry.text);
  }

  async openSession(): Promise<void> {
    if (!this.characterSelect.value) return;
    const created = await this.controller.open(this.characterSelect.value);
    this.emotionSelect.value = created.status.emotion;
    this.topicSelect.value = created.status.topic;
    this.thread.replaceChildren();
  }

  async sendCurrent(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || !this.controller.sessionId) return;
    this.input.value = "";
    this.thread.appendChild(this.bubble({ who: "user", text }));
    const pending = this.bubble({ who: "agent", text: "" });
    this.thread.appendChild(pending);
    await this.controller.sendStreaming(text, (chunk) => {
      pending.textContent += chunk;
    });
  }

  async applySteering(): Promise<void> {
    if (!this.controller.sessionId) return;
    await this.controller.steer({
      emotion: this.emotionSelect.value,
      topic: this.topicSelect.value,
    });
  }
}
