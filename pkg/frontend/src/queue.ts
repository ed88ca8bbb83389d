/**
 * Single in-flight task queue: at most one task runs at a time and later
 * submissions wait their turn in FIFO order. A failed task rejects its own
 * caller but never blocks the queue.
 */

export class SubmitQueue {
  private tail: Promise<void> = Promise.resolve();
  private depth = 0;

  /** Number of tasks queued or running. */
  get pending(): number {
    return this.depth;
  }

  submit<T>(task: () => Promise<T>): Promise<T> {
    this.depth += 1;
    const run = this.tail.then(task);
    this.tail = run.then(
      () => {
        this.depth -= 1;
      },
      () => {
        this.depth -= 1;
      },
    );
    return run;
  }
}
