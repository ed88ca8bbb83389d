/**
 * Linear undo/redo over immutable snapshots.
 *
 * Committing while undone truncates the redo branch, the usual editor
 * behavior. Because documents are immutable, holding references is enough
 * for exact restoration.
 */

export class History<T> {
  private past: T[] = [];
  private future: T[] = [];

  constructor(public present: T) {}

  commit(next: T): void {
    this.past.push(this.present);
    this.present = next;
    this.future = [];
  }

  get canUndo(): boolean {
    return this.past.length > 0;
  }

  get canRedo(): boolean {
    return this.future.length > 0;
  }

  undo(): boolean {
    const prev = this.past.pop();
    if (prev === undefined) return false;
    this.future.push(this.present);
    this.present = prev;
    return true;
  }

  redo(): boolean {
    const next = this.future.pop();
    if (next === undefined) return false;
    this.past.push(this.present);
    this.present = next;
    return true;
  }
}
