"""Independent replay of the task-2 pixel permutation for master seed 42.

Recomputes the permuted first image of a fixed 784-pixel ramp without going
through the package, and prints its SHA-256 (frozen into the data tests).
"""

import hashlib

import numpy as np

image = (np.arange(784) % 256).astype(np.float64) / 255.0
perm = np.random.Generator(np.random.PCG64(np.random.SeedSequence([42, 2]))).permutation(784)
permuted = np.array([image[perm[j]] for j in range(784)])
print(hashlib.sha256(permuted.astype("<f8").tobytes()).hexdigest())
