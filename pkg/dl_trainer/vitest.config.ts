import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // Fine-tuning on the CPU backend is slow but bounded; give the
    // training tests generous room instead of flaking.
    testTimeout: 600_000,
    hookTimeout: 600_000,
    // tfjs keeps typed-array state per process; a single fork avoids
    // paying the backend warmup repeatedly.
    pool: 'forks',
    poolOptions: { forks: { singleFork: true } },
  },
});
