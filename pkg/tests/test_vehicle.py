import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from depotsim.geometry import Pose
from depotsim.vehicle import (
    AodcaConfig,
    DriveMode,
    HealthStatus,
    Limits,
    STOP_MODES,
    Trajectory,
    TrajectoryPoint,
    VcuInputs,
    VehicleState,
    aodca_scan,
    arc_lengths,
    clamp_accel,
    follow_speed,
    integrate,
    speed_limiter,
    vcu_step,
)

LIMITS = Limits()


def make_vehicle(speed=0.0, mode=DriveMode.IDLE, heading=0.0):
    return VehicleState(id="V1", pose=Pose(0, 0, heading), speed=speed, mode=mode)


def straight_traj(length=100.0, speed=4.4704, n=5):
    pts = []
    for i in range(n):
        x = length * i / (n - 1)
        v = 0.0 if i == n - 1 else speed
        pts.append(TrajectoryPoint(x, 0.0, 0.0, v, i + 1))
    return Trajectory(0, tuple(pts), n)


class TestAodcaScan:
    def test_obstacle_in_envelope_detected(self):
        # front bumper at x=3, obstacle center 3 m beyond it; stopping distance
        # 2.498 m at 4.47 m/s, margin 1.0 + radius 0.3 -> gate 3.798 >= 3
        v = make_vehicle(speed=4.4704)
        detected, nearest = aodca_scan(v, [((6.0, 0.0), 0.3)], AodcaConfig(), 4.0)
        assert detected
        assert nearest == pytest.approx(3.0)

    def test_no_obstacles(self):
        v = make_vehicle(speed=4.4704)
        detected, nearest = aodca_scan(v, [], AodcaConfig(), 4.0)
        assert not detected and nearest is None

    def test_beyond_range_not_detected(self):
        # 12 m from the footprint with a 10 m range gate
        v = make_vehicle(speed=11.176)
        detected, _ = aodca_scan(v, [((15.0, 0.0), 0.3)], AodcaConfig(), 4.0)
        assert not detected

    def test_outside_envelope_not_detected(self):
        # slow vehicle: envelope 0.125 + 1.3 margin; obstacle 3 m off the bumper
        v = make_vehicle(speed=1.0)
        detected, _ = aodca_scan(v, [((6.0, 0.0), 0.3)], AodcaConfig(), 4.0)
        assert not detected

    def test_fov_cone_excludes_side_obstacle(self):
        v = make_vehicle(speed=2.0)
        cfg = AodcaConfig(fov=2 * math.pi / 3)
        detected, _ = aodca_scan(v, [((0.0, 3.0), 0.3)], cfg, 4.0)
        assert not detected
        detected, _ = aodca_scan(v, [((4.2, 0.0), 0.3)], cfg, 4.0)
        assert detected


class TestSpeedLimiter:
    def test_clamps(self):
        assert speed_limiter(11.176, 4.4704) == 4.4704

    def test_pass_through(self):
        assert speed_limiter(3.0, 4.4704) == 3.0

    def test_boundary_equality(self):
        assert speed_limiter(6.7056, 6.7056) == 6.7056

    def test_rejects_nonpositive_cap(self):
        with pytest.raises(ValueError):
            speed_limiter(1.0, 0.0)

    def test_accel_clamp(self):
        assert clamp_accel(9.0, LIMITS) == LIMITS.max_accel
        assert clamp_accel(-9.0, LIMITS) == -LIMITS.service_decel
        assert clamp_accel(1.0, LIMITS) == 1.0


def inputs(**kw):
    defaults = dict(
        traj_age_ticks=0,
        aodca_detected=False,
        estop_latched=False,
        station_docked=False,
        health=HealthStatus(),
        has_trajectory=True,
        tracking_accel=1.0,
    )
    defaults.update(kw)
    return VcuInputs(**defaults)


class TestVcuStep:
    def test_comm_loss_after_threshold(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        mode, accel = vcu_step(v, inputs(traj_age_ticks=31), LIMITS, 100)
        assert mode == DriveMode.COMM_LOSS_STOP
        assert accel == -LIMITS.service_decel

    def test_age_30_still_following(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        mode, _ = vcu_step(v, inputs(traj_age_ticks=30), LIMITS, 100)
        assert mode == DriveMode.FOLLOWING

    def test_estop_dominates_aeb(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        mode, accel = vcu_step(
            v, inputs(estop_latched=True, aodca_detected=True), LIMITS, 5
        )
        assert mode == DriveMode.ESTOP_STOP
        assert accel == -LIMITS.aeb_decel

    def test_priority_chain(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        bad_health = HealthStatus(brake_primary_ok=False, brake_secondary_ok=False)
        mode, _ = vcu_step(v, inputs(health=bad_health, aodca_detected=True), LIMITS, 5)
        assert mode == DriveMode.FAULT_STOP
        mode, _ = vcu_step(v, inputs(aodca_detected=True, traj_age_ticks=40), LIMITS, 5)
        assert mode == DriveMode.AEB_STOP

    def test_all_sixteen_health_combinations(self):
        # significant failure := !power or (!brake_primary and !brake_secondary)
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        for bp, bs, pw, ao in itertools.product([True, False], repeat=4):
            h = HealthStatus(bp, bs, pw, ao)
            expected_fail = (not pw) or (not bp and not bs)
            mode, _ = vcu_step(v, inputs(health=h), LIMITS, 5)
            if expected_fail:
                assert mode == DriveMode.FAULT_STOP, (bp, bs, pw, ao)
            else:
                assert mode == DriveMode.FOLLOWING, (bp, bs, pw, ao)

    def test_single_channel_failure_keeps_following(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        h = HealthStatus(brake_primary_ok=False, brake_secondary_ok=True)
        mode, _ = vcu_step(v, inputs(health=h), LIMITS, 5)
        assert mode == DriveMode.FOLLOWING

    def test_station_and_idle(self):
        v = make_vehicle(speed=0.0)
        mode, accel = vcu_step(v, inputs(station_docked=True), LIMITS, 5)
        assert mode == DriveMode.AT_STATION and accel == 0.0
        mode, _ = vcu_step(v, inputs(has_trajectory=False, traj_age_ticks=None), LIMITS, 5)
        assert mode == DriveMode.IDLE

    def test_watchdog_disabled(self):
        v = make_vehicle(speed=4.0, mode=DriveMode.FOLLOWING)
        mode, _ = vcu_step(v, inputs(traj_age_ticks=99, watchdog_enabled=False), LIMITS, 5)
        assert mode == DriveMode.FOLLOWING

    def test_aeb_latch_until_standstill(self):
        v = make_vehicle(speed=2.0, mode=DriveMode.AEB_STOP)
        mode, _ = vcu_step(v, inputs(aodca_detected=False), LIMITS, 5)
        assert mode == DriveMode.AEB_STOP
        v.speed = 0.0
        mode, _ = vcu_step(v, inputs(aodca_detected=False), LIMITS, 6)
        assert mode == DriveMode.FOLLOWING

    def test_pure_function_of_inputs(self):
        v = make_vehicle(speed=3.0, mode=DriveMode.FOLLOWING)
        i = inputs(traj_age_ticks=12, tracking_accel=0.7)
        assert vcu_step(v, i, LIMITS, 9) == vcu_step(v, i, LIMITS, 9)


class TestIntegrate:
    def test_euler_speed_step(self):
        v = make_vehicle(speed=4.0)
        integrate(v, -4.0, 0.1)
        assert v.speed == pytest.approx(3.6)

    def test_floor_at_zero(self):
        v = make_vehicle(speed=0.3)
        integrate(v, -6.0, 0.1)
        assert v.speed == 0.0

    def test_full_stop_from_hs_matches_recurrence(self):
        # independent oracle: run the recurrence by hand and sum displacements
        speed, distance, ticks = 11.176, 0.0, 0
        while speed > 0:
            new_speed = max(0.0, speed - 0.6)
            distance += (speed + new_speed) / 2 * 0.1
            speed = new_speed
            ticks += 1
        assert ticks == 19
        assert distance == pytest.approx(10.4, abs=0.05)

        v = make_vehicle(speed=11.176)
        v.active_traj = straight_traj(length=50.0, speed=11.176)
        v.arc_s = 0.0
        n = 0
        while v.speed > 0:
            integrate(v, -6.0, 0.1)
            n += 1
        assert n == 19
        assert v.arc_s == pytest.approx(distance, abs=1e-9)

    def test_no_brake_authority_coasts_past_path_end(self):
        v = make_vehicle(speed=4.0)
        v.active_traj = straight_traj(length=2.0, speed=4.0, n=2)
        for _ in range(10):
            integrate(v, -4.0, 0.1, brake_authority=False)
        assert v.speed == 4.0
        assert v.pose.x > 2.0  # ran off the commanded path


class TestFollowSpeed:
    def test_brakes_into_zero_knot(self):
        traj = straight_traj(length=100.0, speed=4.4704)
        table = arc_lengths(traj)
        # far from the end: cruise; near the end: braking envelope
        assert follow_speed(traj, 0.0, table, 4.0) == pytest.approx(4.4704)
        near_end = follow_speed(traj, 99.0, table, 4.0)
        assert near_end == pytest.approx(math.sqrt(2 * 4.0 * 1.0))
        assert follow_speed(traj, 100.0, table, 4.0) == 0.0

    def test_exhausted_trajectory_commands_zero(self):
        traj = straight_traj(length=10.0, speed=2.0)
        table = arc_lengths(traj)
        assert follow_speed(traj, 11.0, table, 4.0) == 0.0


class TestStopLatching:
    def test_speed_non_increasing_in_stop_modes(self):
        v = make_vehicle(speed=4.4704, mode=DriveMode.FOLLOWING)
        v.active_traj = straight_traj()
        v.estop_latched = True
        speeds = []
        for t in range(30):
            mode, accel = vcu_step(v, inputs(estop_latched=True), LIMITS, t)
            v.mode = mode
            integrate(v, accel, 0.1)
            speeds.append(v.speed)
        assert all(b <= a + 1e-12 for a, b in zip(speeds, speeds[1:]))
        assert speeds[-1] == 0.0

    @pytest.mark.parametrize("failed", ["primary", "secondary"])
    def test_single_point_brake_failure_still_stops(self, failed):
        h = HealthStatus(
            brake_primary_ok=failed != "primary",
            brake_secondary_ok=failed != "secondary",
        )
        v = make_vehicle(speed=4.4704, mode=DriveMode.FOLLOWING)
        v.active_traj = straight_traj()
        for t in range(30):
            mode, accel = vcu_step(v, inputs(estop_latched=True, health=h), LIMITS, t)
            v.mode = mode
            integrate(v, accel, 0.1, brake_authority=h.brake_authority())
        assert v.speed == 0.0


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0.5, 15.0), min_size=2, max_size=6),
    st.floats(3.0, 11.176),
)
def test_limiter_property_speed_never_exceeds_cap(target_speeds, cap):
    """With the limiter enabled the plant never exceeds the cap regardless of
    commanded trajectory speeds."""
    pts = []
    x = 0.0
    for i, v in enumerate(target_speeds):
        pts.append(TrajectoryPoint(x, 0.0, 0.0, v, i + 1))
        x += 25.0
    traj = Trajectory(0, tuple(pts), len(pts))
    table = arc_lengths(traj)
    veh = make_vehicle(speed=0.0, mode=DriveMode.FOLLOWING)
    veh.active_traj = traj
    for t in range(400):
        cmd = follow_speed(traj, veh.arc_s, table, LIMITS.service_decel)
        cmd = speed_limiter(cmd, cap)
        mode, accel = vcu_step(
            veh, inputs(tracking_accel=(cmd - veh.speed) / 0.1), LIMITS, t
        )
        veh.mode = mode
        integrate(veh, accel, 0.1)
        assert veh.speed <= cap + 1e-9


def test_watchdog_property_any_gap_over_30_stops():
    """If no trajectory is accepted during (t, t+30], the mode at t+31 is a stop mode."""
    v = make_vehicle(speed=4.4704, mode=DriveMode.FOLLOWING)
    v.active_traj = straight_traj(length=500.0)
    last_accept = 10
    modes = {}
    for t in range(200):
        age = t - last_accept if t >= last_accept else 0
        mode, accel = vcu_step(v, inputs(traj_age_ticks=age, tracking_accel=0.0), LIMITS, t)
        v.mode = mode
        integrate(v, accel, 0.1)
        modes[t] = mode
    assert modes[last_accept + 31] in STOP_MODES
    assert modes[last_accept + 30] == DriveMode.FOLLOWING
