"""Closed-loop plumbing: a plant, the finger, the sensor and the three servo loops.

One servo cycle is sense, compute all commands from that single frame,
integrate the finger pose, then re-solve the plant for the new pose.
Everything here is an immutable value, so a whole rig can be copied,
stored or handed to another process between cycles.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .control import (DT, FingerPose, MotionCommand, PidState, integrate_pose, orientation_pid,
                      orientation_step, vertical_pid, vertical_step)
from .physics import (PageMaterial, PageState, RigidPlane, contact_forces, plane_contact,
                      solve_quasi_static)
from .tactile import SensorCalibration, TactileFrame, TactileSums, compute_sums, render_tactile


@dataclass(frozen=True)
class PagePlant:
    state: PageState
    material: PageMaterial

    def contact(self, finger):
        return contact_forces(self.state, finger, self.material)

    def advance(self, finger) -> "PagePlant":
        return replace(self, state=solve_quasi_static(self.state, self.material, finger))


@dataclass(frozen=True)
class PlanePlant:
    plane: RigidPlane = field(default_factory=RigidPlane)

    def contact(self, finger):
        return plane_contact(self.plane, finger)

    def advance(self, finger) -> "PlanePlant":
        return self


@dataclass(frozen=True)
class Servo:
    """The orientation and vertical PID loops."""

    orientation: PidState = field(default_factory=orientation_pid)
    vertical: PidState = field(default_factory=vertical_pid)

    def reset(self) -> "Servo":
        return Servo(self.orientation.reset(), self.vertical.reset())


@dataclass(frozen=True)
class Rig:
    plant: PagePlant | PlanePlant
    pose: FingerPose
    servo: Servo = field(default_factory=Servo)
    calib: SensorCalibration = field(default_factory=SensorCalibration)
    seed: int = 0
    cycle: int = 0
    dt: float = DT

    def sense(self) -> tuple[TactileFrame, TactileSums]:
        contact = self.plant.contact(self.pose)
        frame = render_tactile(contact, self.calib, rng_seed=[self.seed, self.cycle], timestamp=self.cycle)
        return frame, compute_sums(frame)


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    sums: TactileSums
    command: MotionCommand
    delta_alpha: float
    pose: FingerPose  # after the move


def servo_cycle(rig: Rig, P_des: float, V_t: float = 0.0) -> tuple[Rig, CycleRecord]:
    """One 50 Hz cycle with the PID loops closed on ``P_des``."""
    _, sums = rig.sense()
    omega, d_alpha, o_pid = orientation_step(rig.servo.orientation, sums.P_dif, rig.dt)
    v_v, _, v_pid = vertical_step(rig.servo.vertical, sums.P_s, P_des, rig.dt)
    cmd = MotionCommand(omega, v_v, V_t)
    return _apply(rig, sums, cmd, Servo(o_pid, v_pid))


def open_loop_cycle(rig: Rig, cmd: MotionCommand) -> tuple[Rig, CycleRecord]:
    """One cycle driven by an explicit command; the PID states are left untouched."""
    _, sums = rig.sense()
    return _apply(rig, sums, cmd, rig.servo)


def _apply(rig, sums, cmd, servo):
    pose = integrate_pose(rig.pose, cmd, rig.dt)
    plant = rig.plant.advance(pose)
    rec = CycleRecord(rig.cycle, sums, cmd, pose.alpha - rig.pose.alpha, pose)
    return replace(rig, plant=plant, pose=pose, servo=servo, cycle=rig.cycle + 1), rec

