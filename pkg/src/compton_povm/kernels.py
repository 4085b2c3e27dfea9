"""Hot numeric loops, each with a numba and a pure-numpy implementation.

The public names (``coplanar_coefficients``, ``nested_total_cross_section``)
dispatch on :data:`compton_povm._accel.USE_NUMBA`. The ``*_numba`` and
``*_numpy`` variants stay importable so the two paths can be compared.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# above this many leaf evaluations the numpy path loops over the outer axis
_NUMPY_BLOCK = 1 << 21


@njit(cache=True)
def coplanar_coefficients_numba(e0, thetas):
    m, n = thetas.shape
    alpha = np.empty(m)
    gamma = np.empty(m)
    e_final = np.empty(m)
    for k in range(m):
        # first row of the upper 2x2 block of T_N ... T_1
        b00 = 1.0
        b01 = 0.0
        b10 = 0.0
        b11 = 1.0
        e = e0
        for j in range(n):
            c = np.cos(thetas[k, j])
            ep = e / (1.0 + e * (1.0 - c))
            pref = 0.5 * (ep / e) ** 2
            t12 = 1.0 - c * c
            t11 = 1.0 + c * c + (e - ep) * (1.0 - c)
            t22 = 2.0 - t12
            n00 = pref * (t11 * b00 + t12 * b10)
            n01 = pref * (t11 * b01 + t12 * b11)
            n10 = pref * (t12 * b00 + t22 * b10)
            n11 = pref * (t12 * b01 + t22 * b11)
            b00, b01, b10, b11 = n00, n01, n10, n11
            e = ep
        alpha[k] = b00
        gamma[k] = b01
        e_final[k] = e
    return alpha, gamma, e_final


def coplanar_coefficients_numpy(e0, thetas):
    thetas = np.asarray(thetas, dtype=float)
    m, n = thetas.shape
    b00 = np.ones(m)
    b01 = np.zeros(m)
    b10 = np.zeros(m)
    b11 = np.ones(m)
    e = np.full(m, float(e0))
    for j in range(n):
        c = np.cos(thetas[:, j])
        ep = e / (1.0 + e * (1.0 - c))
        pref = 0.5 * (ep / e) ** 2
        t12 = 1.0 - c * c
        t11 = 1.0 + c * c + (e - ep) * (1.0 - c)
        t22 = 2.0 - t12
        b00, b01, b10, b11 = (
            pref * (t11 * b00 + t12 * b10),
            pref * (t11 * b01 + t12 * b11),
            pref * (t12 * b00 + t22 * b10),
            pref * (t12 * b01 + t22 * b11),
        )
        e = ep
    return b00, b01, e


@njit(cache=True)
def _set_level(j, idx, cos_nodes, weights, energies, prefix):
    e = energies[j]
    c = cos_nodes[idx[j]]
    r = 1.0 / (1.0 + e * (1.0 - c))
    a = 0.5 * r * r * (r + 1.0 / r - (1.0 - c * c))
    energies[j + 1] = e * r
    prefix[j + 1] = prefix[j] * weights[idx[j]] * a


@njit(cache=True)
def nested_total_cross_section_numba(e0, n_levels, cos_nodes, weights):
    if n_levels == 0:
        return 1.0
    m = cos_nodes.shape[0]
    idx = np.zeros(n_levels, dtype=np.int64)
    energies = np.empty(n_levels + 1)
    prefix = np.empty(n_levels + 1)
    energies[0] = e0
    prefix[0] = 1.0
    for j in range(n_levels - 1):
        _set_level(j, idx, cos_nodes, weights, energies, prefix)
    last = n_levels - 1
    total = 0.0
    while True:
        e = energies[last]
        s = 0.0
        for i in range(m):
            c = cos_nodes[i]
            r = 1.0 / (1.0 + e * (1.0 - c))
            s += weights[i] * 0.5 * r * r * (r + 1.0 / r - (1.0 - c * c))
        total += prefix[last] * s
        # odometer over the outer levels
        j = last - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < m:
                break
            idx[j] = 0
            j -= 1
        if j < 0:
            break
        for k in range(j, last):
            _set_level(k, idx, cos_nodes, weights, energies, prefix)
    return total


def _nested_numpy(energies, levels, cos_nodes, weights):
    if levels == 0:
        return np.ones_like(energies)
    r = 1.0 / (1.0 + energies[..., None] * (1.0 - cos_nodes))
    a = 0.5 * r * r * (r + 1.0 / r - (1.0 - cos_nodes**2))
    if energies.size * cos_nodes.size**levels <= _NUMPY_BLOCK:
        inner = _nested_numpy(energies[..., None] * r, levels - 1, cos_nodes, weights)
        return np.sum(weights * a * inner, axis=-1)
    out = np.zeros_like(energies)
    for i in range(cos_nodes.size):
        inner = _nested_numpy(energies * r[..., i], levels - 1, cos_nodes, weights)
        out += weights[i] * a[..., i] * inner
    return out


def nested_total_cross_section_numpy(e0, n_levels, cos_nodes, weights):
    e = np.asarray(float(e0))
    return float(_nested_numpy(e, int(n_levels), np.asarray(cos_nodes), np.asarray(weights)))


if USE_NUMBA:

    def coplanar_coefficients(e0, thetas):
        return coplanar_coefficients_numba(float(e0), np.ascontiguousarray(thetas, dtype=float))

    def nested_total_cross_section(e0, n_levels, cos_nodes, weights):
        return float(
            nested_total_cross_section_numba(
                float(e0),
                int(n_levels),
                np.ascontiguousarray(cos_nodes, dtype=float),
                np.ascontiguousarray(weights, dtype=float),
            )
        )

else:
    coplanar_coefficients = coplanar_coefficients_numpy
    nested_total_cross_section = nested_total_cross_section_numpy
