"""Pure numpy fallback for the stepping kernels.

Batched over replicas per step; mathematically identical to the compiled
kernels (results agree to floating-point associativity, and all integer
decisions downstream are backend-independent).
"""

import numpy as np


def step_matrix_chains(atoms, idx, dirs, logs, t0, t1, right_mult=False):
    for t in range(t0, t1):
        sel = atoms[idx[:, t]]
        tmp = dirs @ sel if right_mult else sel @ dirs
        nrm = np.sqrt(np.einsum("rij,rij->r", tmp, tmp))
        dirs[...] = tmp / nrm[:, None, None]
        logs += np.log(nrm)


def step_vector_chains(atoms, idx, vecs, logs, t0, t1):
    for t in range(t0, t1):
        tmp = np.einsum("rij,rj->ri", atoms[idx[:, t]], vecs)
        nrm = np.sqrt(np.einsum("ri,ri->r", tmp, tmp))
        vecs[...] = tmp / nrm[:, None]
        logs += np.log(nrm)


def step_vector_chain_trace(atoms, idx, vec, t0, t1, out_lognorms):
    for t in range(t0, t1):
        tmp = atoms[idx[t]] @ vec
        nrm = np.linalg.norm(tmp)
        vec[...] = tmp / nrm
        out_lognorms[t] = np.log(nrm)
