/**
 * SplitMix64 stream mirroring the server implementation bit-for-bit.
 *
 * The server derives every stochastic choice from this generator; running
 * the same derivation here lets a client-side policy reproduce an
 * in-process rollout exactly. All arithmetic is 64-bit via BigInt masks.
 */

const MASK64 = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;

/** Seeds that cross a JSON boundary stay below 2^53. */
export const JSON_SAFE_SEED_MASK = (1n << 53n) - 1n;

export function mix64(z: bigint): bigint {
  z &= MASK64;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  return z ^ (z >> 31n);
}

export function fnv1a64(text: string): bigint {
  let h = 0xcbf29ce484222325n;
  for (const byte of Buffer.from(text, "utf8")) {
    h ^= BigInt(byte);
    h = (h * 0x100000001b3n) & MASK64;
  }
  return h;
}

export function derive(seed: bigint | number, ...keys: (string | number | bigint)[]): bigint {
  let h = mix64(BigInt(seed));
  for (const key of keys) {
    const folded = typeof key === "string" ? fnv1a64(key) : BigInt(key) & MASK64;
    h = mix64(h ^ folded);
  }
  return h;
}

export class Rng {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GOLDEN) & MASK64;
    return mix64(this.state);
  }

  /** Uniform integer in [0, n); plain modulo, matching the server. */
  randrange(n: number): number {
    if (n <= 0) throw new RangeError("randrange requires n >= 1");
    return Number(this.nextU64() % BigInt(n));
  }
}

/** Seed of episode k in a suite, identical to the server's derivation. */
export function episodeSeed(suiteSeed: number, k: number): number {
  return Number(derive(suiteSeed, "episode", k) & JSON_SAFE_SEED_MASK);
}

/** Per-episode stream feeding the uniform-random policy. */
export function policyRng(episodeSeedValue: number): Rng {
  return new Rng(derive(episodeSeedValue, "policy"));
}

const UNIFORM_THOUGHT = "picking a random admissible action";

/**
 * The uniform-random policy response for one step: index into the
 * admissible list with the policy stream and wrap the action in the
 * think/action tags the server expects.
 */
export function uniformRandomResponse(rng: Rng, admissible: string[]): string {
  if (admissible.length === 0) throw new Error("no admissible actions");
  const action = admissible[rng.randrange(admissible.length)];
  return `<think>${UNIFORM_THOUGHT}</think><action>${action}</action>`;
}
