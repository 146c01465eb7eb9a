// Serializes submissions so acks arrive in order; the last acknowledged
// write wins, matching the server's upsert semantics.

export class AutosaveQueue {
  private chain: Promise<void> = Promise.resolve();
  private pending = 0;

  enqueue(task: () => Promise<void>): Promise<void> {
    this.pending += 1;
    this.chain = this.chain
      .then(task)
      .catch(() => {
        // the task reports its own failure; keep the queue alive
      })
      .finally(() => {
        this.pending -= 1;
      });
    return this.chain;
  }

  get busy(): boolean {
    return this.pending > 0;
  }

  async flush(): Promise<void> {
    await this.chain;
  }
}
