// Accumulates active-tab time for the open document; the total is posted
// when the annotator navigates away.

export class DocumentTimer {
  private activeSince: number | null = null;
  private accumulatedMs = 0;

  constructor(private readonly now: () => number = () => Date.now()) {}

  start(): void {
    if (this.activeSince === null) {
      this.activeSince = this.now();
    }
  }

  pause(): void {
    if (this.activeSince !== null) {
      this.accumulatedMs += this.now() - this.activeSince;
      this.activeSince = null;
    }
  }

  /** Stop the clock and hand over the minutes collected so far. */
  takeMinutes(): number {
    this.pause();
    const minutes = this.accumulatedMs / 60_000;
    this.accumulatedMs = 0;
    return Math.round(minutes * 100) / 100;
  }
}
