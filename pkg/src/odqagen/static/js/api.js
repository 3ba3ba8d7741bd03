// Client for the annotation service JSON API.
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
    }
}
async function asJson(response) {
    if (!response.ok) {
        throw new ApiError(`request failed: ${response.status}`, response.status);
    }
    return (await response.json());
}
export class ApiClient {
    constructor(base = "") {
        this.base = base;
    }
    async nextTask(annotator, category) {
        const params = new URLSearchParams({ annotator });
        if (category) {
            params.set("category", category);
        }
        return asJson(await fetch(`${this.base}/api/tasks/next?${params}`));
    }
    async submitLabel(taskId, annotator, label) {
        await asJson(await fetch(`${this.base}/api/labels`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ task_id: taskId, annotator, label }),
        }));
    }
    async progress() {
        return asJson(await fetch(`${this.base}/api/progress`));
    }
}
