# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled generation loop.

This is a line-for-line transcription of the pure-Python step logic in
world.py and neural.py: the same libm calls, the same operation order, the
same uniform draws pulled from the caller's PCG64 stream through the
BitGenerator capsule. Any change to the float recipes there must be made
here too, or the engines stop being bit-identical.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t
from libc.math cimport exp, sin, cos, atan2, fmod, M_PI

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double DEG_TO_RAD = M_PI / 180.0
cdef double RAD_TO_DEG = 180.0 / M_PI

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline double _wrap_coord(double v, double size) noexcept:
    v = fmod(v, size)
    if v < 0.0:
        v += size
    if v >= size:
        v -= size
    return v


cdef inline double _wrap_angle(double deg) noexcept:
    deg = fmod(deg, 360.0)
    if deg < 0.0:
        deg += 360.0
    if deg >= 360.0:
        deg -= 360.0
    return deg


cdef inline double _torus_delta(double a, double b, double size) noexcept:
    cdef double d = b - a
    if d > 0.5 * size:
        d -= size
    elif d < -0.5 * size:
        d += size
    return d


cdef inline double _sigmoid(double z) noexcept:
    return 1.0 / (1.0 + exp(-z))


def run_generation(
    double[:, :, ::1] a_wih, double[:, :, ::1] a_who,
    double[:, :, ::1] r_wih, double[:, :, ::1] r_who,
    double[::1] xs, double[::1] ys, double[::1] headings,
    cnp.int64_t[::1] energies,
    double[::1] food_x, double[::1] food_y,
    double width, double height,
    double vision_radius, double eat_distance,
    double base_speed, double turn_angle,
    double rx_min, double rx_max, double ry_min, double ry_max,
    double learning_rate, int n_steps, bint learn,
    bit_generator,
    bint tracing,
    cnp.int32_t[::1] t_step, cnp.int32_t[::1] t_agent,
    double[::1] t_x, double[::1] t_y, double[::1] t_heading,
    cnp.int64_t[::1] t_energy, signed char[::1] t_action,
):
    """Run n_steps of the world in place; returns (respawns, teach calls)."""
    cdef int n_agents = xs.shape[0]
    cdef int n_food = food_x.shape[0]
    cdef int n_hidden = a_wih.shape[1]
    cdef int n_input = a_wih.shape[2]
    cdef int n_output = a_who.shape[1]
    if n_input != 3 or n_output != 3:
        raise ValueError("kernel requires 3 sensor inputs and 3 action outputs")

    cdef bitgen_t *rng
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid BitGenerator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)

    scratch = np.empty((5, n_hidden if n_hidden > n_output else n_output), dtype=np.float64)
    cdef double[::1] h = scratch[0]
    cdef double[::1] hr2 = scratch[1]
    cdef double[::1] out = scratch[2]
    cdef double[::1] rout = scratch[3]
    cdef double[::1] dhid = scratch[4]
    cdef double dout[3]
    cdef double xin[3]

    cdef double vision2 = vision_radius * vision_radius
    cdef double eat2 = eat_distance * eat_distance
    cdef double span_x = rx_max - rx_min
    cdef double span_y = ry_max - ry_min

    cdef long respawns = 0
    cdef long taught = 0
    cdef int step, ai, i, j, k, f, act, row
    cdef double best_d2, best_dx, best_dy, dx, dy, d2, theta
    cdef double z, dist, hrad, nx, ny, fx, fy, err

    for step in range(n_steps):
        for ai in range(n_agents):
            # sense: nearest food inside vision_radius, lowest index on ties
            best_d2 = -1.0
            best_dx = 0.0
            best_dy = 0.0
            for f in range(n_food):
                dx = _torus_delta(xs[ai], food_x[f], width)
                dy = _torus_delta(ys[ai], food_y[f], height)
                d2 = dx * dx + dy * dy
                if d2 <= vision2 and (best_d2 < 0.0 or d2 < best_d2):
                    best_d2 = d2
                    best_dx = dx
                    best_dy = dy
            xin[0] = 0.0
            xin[1] = 0.0
            xin[2] = 0.0
            if best_d2 >= 0.0:
                if best_dx == 0.0 and best_dy == 0.0:
                    theta = 0.0
                else:
                    theta = _wrap_angle(atan2(best_dy, best_dx) * RAD_TO_DEG - headings[ai])
                if theta < 15.0 or theta > 345.0:
                    xin[1] = 1.0
                elif 15.0 < theta < 45.0:
                    xin[2] = 1.0
                elif 315.0 < theta < 345.0:
                    xin[0] = 1.0

            # action network forward pass
            for j in range(n_hidden):
                z = 0.0
                for i in range(n_input):
                    z += a_wih[ai, j, i] * xin[i]
                h[j] = _sigmoid(z)
            for k in range(n_output):
                z = 0.0
                for j in range(n_hidden):
                    z += a_who[ai, k, j] * h[j]
                out[k] = _sigmoid(z)
            act = 0
            for k in range(1, n_output):
                if out[k] > out[act]:
                    act = k

            # move
            if act == 1:
                dist = 2.0 * base_speed
            else:
                if act == 0:
                    headings[ai] = _wrap_angle(headings[ai] - turn_angle)
                else:
                    headings[ai] = _wrap_angle(headings[ai] + turn_angle)
                dist = base_speed
            hrad = headings[ai] * DEG_TO_RAD
            xs[ai] = _wrap_coord(xs[ai] + dist * cos(hrad), width)
            ys[ai] = _wrap_coord(ys[ai] + dist * sin(hrad), height)

            # eat anything in reach; each eaten item respawns immediately
            for f in range(n_food):
                dx = _torus_delta(xs[ai], food_x[f], width)
                dy = _torus_delta(ys[ai], food_y[f], height)
                if dx * dx + dy * dy <= eat2:
                    energies[ai] += 1
                    respawns += 1
                    fx = food_x[f]
                    fy = food_y[f]
                    while True:
                        nx = rx_min + span_x * rng.next_double(rng.state)
                        ny = ry_min + span_y * rng.next_double(rng.state)
                        if nx != fx or ny != fy:
                            break
                    food_x[f] = nx
                    food_y[f] = ny

            # one self-teach step on this step's sensory input
            if learn:
                for j in range(n_hidden):
                    z = 0.0
                    for i in range(n_input):
                        z += r_wih[ai, j, i] * xin[i]
                    hr2[j] = _sigmoid(z)
                for k in range(n_output):
                    z = 0.0
                    for j in range(n_hidden):
                        z += r_who[ai, k, j] * hr2[j]
                    rout[k] = _sigmoid(z)
                for k in range(n_output):
                    dout[k] = (out[k] - rout[k]) * out[k] * (1.0 - out[k])
                for j in range(n_hidden):
                    err = 0.0
                    for k in range(n_output):
                        err += dout[k] * a_who[ai, k, j]
                    dhid[j] = err * h[j] * (1.0 - h[j])
                for k in range(n_output):
                    for j in range(n_hidden):
                        a_who[ai, k, j] -= learning_rate * (dout[k] * h[j])
                for j in range(n_hidden):
                    for i in range(n_input):
                        a_wih[ai, j, i] -= learning_rate * (dhid[j] * xin[i])
                taught += 1

            if tracing:
                row = step * n_agents + ai
                t_step[row] = step
                t_agent[row] = ai
                t_x[row] = xs[ai]
                t_y[row] = ys[ai]
                t_heading[row] = headings[ai]
                t_energy[row] = energies[ai]
                t_action[row] = <signed char> act

    return respawns, taught
