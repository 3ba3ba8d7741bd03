// Single-page verification flow: show a test question beside its paired
// training questions, take T/F judgments (buttons or keys), advance only
// after the server acks, support undo of the last submission.
import { ApiClient } from "./api.js";
import { renderHighlighted } from "./highlight.js";
const IGNORED_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);
const CATEGORY_LABELS = {
    overlap: "Overlap",
    comp_gen: "Comp-gen",
    novel_entity: "Novel-entity",
};
export class App {
    constructor(root, api = new ApiClient()) {
        this.root = root;
        this.api = api;
        this.current = null;
        this.lastSubmitted = null;
        this.pending = null;
        this.busy = false;
        this.annotator = "";
        this.remaining = 0;
        this.keyHandler = (event) => this.onKey(event);
    }
    start() {
        this.renderLogin();
    }
    stop() {
        window.removeEventListener("keydown", this.keyHandler);
    }
    async begin(annotator, category) {
        this.annotator = annotator.trim();
        this.category = category || undefined;
        if (!this.annotator) {
            return;
        }
        window.addEventListener("keydown", this.keyHandler);
        await this.fetchNext();
    }
    onKey(event) {
        const target = event.target;
        if (target && (IGNORED_TAGS.has(target.tagName) || target.isContentEditable)) {
            return;
        }
        const key = event.key.toLowerCase();
        if (key === "t" || key === "f") {
            event.preventDefault();
            void this.submit(key === "t");
        }
        else if (key === "u") {
            event.preventDefault();
            this.undo();
        }
        else if (key === "r" && this.pending) {
            event.preventDefault();
            void this.retry();
        }
    }
    async submit(label) {
        if (this.busy || !this.current) {
            return;
        }
        const task = this.current;
        this.busy = true;
        this.setStatus("saving…");
        try {
            await this.api.submitLabel(task.task_id, this.annotator, label);
        }
        catch {
            // keep the task and the chosen label; nothing is lost
            this.pending = { kind: "submit", task, label };
            this.busy = false;
            this.renderRetryBanner(`Could not save ${label ? "T" : "F"} for this task.`);
            return;
        }
        this.pending = null;
        this.lastSubmitted = task;
        this.busy = false;
        await this.fetchNext();
    }
    undo() {
        if (this.busy || !this.lastSubmitted) {
            return;
        }
        // restore the last task; the next T/F re-submits it (last write wins)
        this.current = this.lastSubmitted;
        this.lastSubmitted = null;
        this.renderTask("undone — submit again");
    }
    async retry() {
        const pending = this.pending;
        if (!pending) {
            return;
        }
        this.pending = null;
        if (pending.kind === "submit") {
            this.current = pending.task;
            await this.submit(pending.label);
        }
        else {
            await this.fetchNext();
        }
    }
    async fetchNext() {
        this.setStatus("loading…");
        try {
            const response = await this.api.nextTask(this.annotator, this.category);
            this.remaining = response.remaining;
            this.current = response.task;
        }
        catch {
            this.pending = { kind: "fetch" };
            this.renderRetryBanner("Could not reach the service.");
            return;
        }
        if (this.current) {
            this.renderTask();
        }
        else {
            await this.renderDone();
        }
    }
    // ------------------------------------------------------------- rendering
    clear() {
        this.root.textContent = "";
        return this.root;
    }
    setStatus(text) {
        const status = this.root.querySelector(".status");
        if (status) {
            status.textContent = text;
        }
    }
    renderLogin() {
        const root = this.clear();
        const form = document.createElement("form");
        form.className = "login";
        const title = document.createElement("h1");
        title.textContent = "Question verification";
        const name = document.createElement("input");
        name.id = "annotator";
        name.placeholder = "your name";
        name.autocomplete = "off";
        const category = document.createElement("select");
        category.id = "category";
        for (const [value, label] of [["", "all categories"], ...Object.entries(CATEGORY_LABELS)]) {
            const option = document.createElement("option");
            option.value = value;
            option.textContent = label;
            category.append(option);
        }
        const button = document.createElement("button");
        button.type = "submit";
        button.textContent = "Start";
        form.append(title, name, category, button);
        form.addEventListener("submit", (event) => {
            event.preventDefault();
            void this.begin(name.value, category.value || undefined);
        });
        root.append(form);
        name.focus();
    }
    renderTask(note = "") {
        const task = this.current;
        if (!task) {
            return;
        }
        const root = this.clear();
        const card = document.createElement("section");
        card.className = "task";
        const header = document.createElement("header");
        const badge = document.createElement("span");
        badge.className = `badge badge-${task.category}`;
        badge.textContent = CATEGORY_LABELS[task.category] ?? task.category;
        const counter = document.createElement("span");
        counter.className = "remaining";
        counter.textContent = `${this.remaining} open`;
        header.append(badge, counter);
        const question = document.createElement("p");
        question.className = "question";
        if (task.category === "novel_entity" && task.entities.length) {
            question.append(renderHighlighted(task.question, task.entities));
        }
        else {
            question.textContent = task.question;
        }
        const guidance = document.createElement("details");
        guidance.className = "guidance";
        const summary = document.createElement("summary");
        summary.textContent = "Guidance";
        const guidanceText = document.createElement("p");
        guidanceText.textContent = task.guidance;
        guidance.append(summary, guidanceText);
        const pairedTitle = document.createElement("h2");
        pairedTitle.textContent = "Training questions";
        const paired = document.createElement("ol");
        paired.className = "paired";
        for (const pair of task.paired) {
            const item = document.createElement("li");
            const text = document.createElement("span");
            // verbatim server payload; never reordered or rewritten
            text.textContent = pair.question ?? pair.id;
            const score = document.createElement("span");
            score.className = "score";
            score.textContent = pair.score.toFixed(3);
            item.append(text, score);
            paired.append(item);
        }
        const controls = document.createElement("div");
        controls.className = "controls";
        const yes = document.createElement("button");
        yes.className = "btn-true";
        yes.textContent = "True (T)";
        yes.addEventListener("click", () => void this.submit(true));
        const no = document.createElement("button");
        no.className = "btn-false";
        no.textContent = "False (F)";
        no.addEventListener("click", () => void this.submit(false));
        const undo = document.createElement("button");
        undo.className = "btn-undo";
        undo.textContent = "Undo (U)";
        undo.disabled = !this.lastSubmitted;
        undo.addEventListener("click", () => this.undo());
        controls.append(yes, no, undo);
        const status = document.createElement("p");
        status.className = "status";
        status.textContent = note;
        card.append(header, question, guidance, pairedTitle, paired, controls, status);
        root.append(card);
    }
    renderRetryBanner(message) {
        if (this.current) {
            this.renderTask();
        }
        const banner = document.createElement("div");
        banner.className = "banner";
        const text = document.createElement("span");
        text.textContent = `${message} Nothing was lost.`;
        const retry = document.createElement("button");
        retry.className = "btn-retry";
        retry.textContent = "Retry (R)";
        retry.addEventListener("click", () => void this.retry());
        banner.append(text, retry);
        this.root.prepend(banner);
    }
    async renderDone() {
        const root = this.clear();
        const panel = document.createElement("section");
        panel.className = "done";
        const title = document.createElement("h1");
        title.textContent = "All done";
        panel.append(title);
        try {
            const progress = await this.api.progress();
            const list = document.createElement("ul");
            for (const [category, stats] of Object.entries(progress.categories)) {
                const item = document.createElement("li");
                item.textContent = `${CATEGORY_LABELS[category] ?? category}: ${stats.labeled}/${stats.total} labeled`;
                list.append(item);
            }
            const total = document.createElement("p");
            total.textContent = `Total: ${progress.total.labeled}/${progress.total.total} labeled`;
            panel.append(list, total);
        }
        catch {
            const note = document.createElement("p");
            note.textContent = "Progress unavailable.";
            panel.append(note);
        }
        root.append(panel);
    }
}
