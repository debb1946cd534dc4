"""Discrete-time kinematic bicycle model.

The same model drives planner rollouts and the simulated plant: forward-Euler
integration of (x, y, theta, v, delta) under an (acceleration, steering-rate)
command. Speed is clamped at zero (no reverse) and the steering angle is
clamped at the mechanical limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# state vector layout used by array-based code
IX, IY, ITHETA, IV, IDELTA = 0, 1, 2, 3, 4


def wrap_angle(theta):
    """Wrap an angle (scalar or array) into [-pi, pi].

    Angles already in range pass through unchanged; out-of-range angles are
    reduced modulo 2*pi (so an input of exactly 3*pi maps to pi's image -pi).
    """
    if np.ndim(theta) == 0:
        if -math.pi <= theta <= math.pi:
            return theta
        return (theta + math.pi) % TWO_PI - math.pi
    theta = np.asarray(theta)
    if np.all(np.abs(theta) <= math.pi):
        return theta
    wrapped = (theta + math.pi) % TWO_PI - math.pi
    return np.where(np.abs(theta) <= math.pi, theta, wrapped)


@dataclass(frozen=True)
class VehicleState:
    """Planar vehicle state: position (m), yaw (rad), speed (m/s), steering (rad)."""

    x: float
    y: float
    theta: float
    v: float
    delta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.v, self.delta], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "VehicleState":
        x, y, theta, v, delta = (float(c) for c in arr)
        return cls(x, y, theta, v, delta)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class ControlInput:
    """Longitudinal acceleration (m/s^2) and steering rate (rad/s)."""

    a: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.omega], dtype=float)


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.57
    delta_max: float = 0.55
    dt: float = 0.25

    def __post_init__(self):
        if self.wheelbase <= 0.0:
            raise ValueError(f"wheelbase must be positive, got {self.wheelbase}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.delta_max <= 0.0:
            raise ValueError(f"delta_max must be positive, got {self.delta_max}")


def step(state: VehicleState, control: ControlInput, params: VehicleParams) -> VehicleState:
    """One explicit-Euler step; the right-hand side uses the pre-step state."""
    dt = params.dt
    x = state.x + state.v * math.cos(state.theta) * dt
    y = state.y + state.v * math.sin(state.theta) * dt
    theta = wrap_angle(state.theta + state.v * math.tan(state.delta) / params.wheelbase * dt)
    v = max(0.0, state.v + control.a * dt)
    delta = min(params.delta_max, max(-params.delta_max, state.delta + control.omega * dt))
    return VehicleState(x, y, theta, v, delta)


def rollout(initial: VehicleState, inputs: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Simulate a (T, 2) input sequence [a, omega]; returns (T+1, 5) states.

    The first row equals the initial state. Deterministic: identical inputs
    produce bit-identical trajectories.
    """
    inputs = np.asarray(inputs, dtype=float).reshape(-1, 2)
    T = inputs.shape[0]
    out = np.empty((T + 1, 5), dtype=float)
    x, y, theta, v, delta = initial.x, initial.y, initial.theta, initial.v, initial.delta
    out[0] = (x, y, theta, v, delta)
    dt, l, dmax = params.dt, params.wheelbase, params.delta_max
    for t in range(T):
        a, omega = inputs[t, 0], inputs[t, 1]
        x = x + v * math.cos(theta) * dt
        y = y + v * math.sin(theta) * dt
        theta = wrap_angle(theta + v * math.tan(delta) / l * dt)
        v = max(0.0, v + a * dt)
        delta = min(dmax, max(-dmax, delta + omega * dt))
        out[t + 1] = (x, y, theta, v, delta)
    return out


def batch_step(states: np.ndarray, controls: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Vectorized Euler step for (M, 5) states under (M, 2) controls."""
    dt = params.dt
    x, y, theta = states[:, IX], states[:, IY], states[:, ITHETA]
    v, delta = states[:, IV], states[:, IDELTA]
    out = np.empty_like(states)
    out[:, IX] = x + v * np.cos(theta) * dt
    out[:, IY] = y + v * np.sin(theta) * dt
    out[:, ITHETA] = wrap_angle(theta + v * np.tan(delta) / params.wheelbase * dt)
    out[:, IV] = np.maximum(0.0, v + controls[:, 0] * dt)
    out[:, IDELTA] = np.clip(delta + controls[:, 1] * dt, -params.delta_max, params.delta_max)
    return out
