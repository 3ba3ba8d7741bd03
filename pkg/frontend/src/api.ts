// Client for the annotation service JSON API.

export interface PairedQuestion {
  id: string;
  question: string | null;
  score: number;
}

export interface EntityRef {
  surface: string;
  title: string;
}

export interface Task {
  task_id: string;
  question_id: string;
  question: string;
  category: string;
  status?: "open" | "labeled";
  paired: PairedQuestion[];
  entities: EntityRef[];
  guidance: string;
}

export interface NextTaskResponse {
  task: Task | null;
  remaining: number;
}

export interface CategoryProgress {
  labeled: number;
  total: number;
}

export interface Progress {
  categories: Record<string, CategoryProgress>;
  total: CategoryProgress;
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    throw new ApiError(`request failed: ${response.status}`, response.status);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly base = "") {}

  async nextTask(annotator: string, category?: string): Promise<NextTaskResponse> {
    const params = new URLSearchParams({ annotator });
    if (category) {
      params.set("category", category);
    }
    return asJson(await fetch(`${this.base}/api/tasks/next?${params}`));
  }

  async submitLabel(taskId: string, annotator: string, label: boolean): Promise<void> {
    await asJson(
      await fetch(`${this.base}/api/labels`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ task_id: taskId, annotator, label }),
      }),
    );
  }

  async progress(): Promise<Progress> {
    return asJson(await fetch(`${this.base}/api/progress`));
  }
}
