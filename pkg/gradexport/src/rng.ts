/**
 * SplitMix64 and a seeded Gaussian stream.
 *
 * Same generator the consumer package uses for its seeded choices, so a
 * seed means the same byte stream on both sides of the format boundary.
 */

const MASK = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK;
    return (z ^ (z >> 31n)) & MASK;
  }

  /** uniform in [0, 1) with 53 bits of precision */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }
}

export class GaussianStream {
  private readonly rng: SplitMix64;
  private spare: number | null = null;

  constructor(seed: number | bigint) {
    this.rng = new SplitMix64(seed);
  }

  /** standard normal via Box-Muller */
  next(): number {
    if (this.spare !== null) {
      const value = this.spare;
      this.spare = null;
      return value;
    }
    // 1 - u keeps the log argument in (0, 1]
    const u1 = 1 - this.rng.nextFloat();
    const u2 = this.rng.nextFloat();
    const radius = Math.sqrt(-2 * Math.log(u1));
    const angle = 2 * Math.PI * u2;
    this.spare = radius * Math.sin(angle);
    return radius * Math.cos(angle);
  }

  fill(length: number): Float32Array {
    const out = new Float32Array(length);
    for (let i = 0; i < length; i++) {
      out[i] = this.next();
    }
    return out;
  }
}
