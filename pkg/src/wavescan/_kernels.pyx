# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the affine state recurrence h_t = a_t*h_{t-1} + b_t."""


def affine_recurrence(const double[:, :, ::1] decay,
                      const double[:, :, ::1] drive,
                      double[:, :, ::1] out):
    cdef Py_ssize_t length = decay.shape[0]
    cdef Py_ssize_t channels = decay.shape[1]
    cdef Py_ssize_t states = decay.shape[2]
    cdef Py_ssize_t t, c, n
    for c in range(channels):
        for n in range(states):
            out[0, c, n] = drive[0, c, n]
    for t in range(1, length):
        for c in range(channels):
            for n in range(states):
                out[t, c, n] = decay[t, c, n] * out[t - 1, c, n] + drive[t, c, n]
