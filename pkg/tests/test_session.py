import pytest

from eskin.protocol import (
    Ack, CollisionEvent, ControlCode, ControlCmd, Disconnect, GraspComplete,
    Heartbeat, Hello, MassUpdate, SensorFrame, SessionState, Stage,
    StageTransition, TargetWeight, VibrationCmd, session_step,
)


def drive(state, *events):
    """Apply events in order; returns (state, all results)."""
    results = []
    for e in events:
        r = session_step(state, e)
        results.append(r)
        state = r.state
    return state, results


HAPPY_PATH = (
    TargetWeight(100),                    # 1 -> 2
    ControlCmd(ControlCode.GRASP),        # 2 -> 3
    GraspComplete(),                      # 3 -> 4
    ControlCmd(ControlCode.VIB_START),    # 4 -> 5
    ControlCmd(ControlCode.CONFIRM),      # 5 -> 6
)


class TestHappyPath:
    def test_reaches_stage_six(self):
        state, results = drive(SessionState(), *HAPPY_PATH)
        assert state.stage is Stage.CONFIRM
        assert state.target_g == 1.0
        assert all(r.error is None for r in results)

    def test_stage_echoes_emitted(self):
        _, results = drive(SessionState(), *HAPPY_PATH)
        echoed = [m.stage for r in results for m in r.to_operator
                  if isinstance(m, StageTransition)]
        assert echoed == [2, 3, 4, 5, 6]

    def test_explicit_stage_transitions_also_legal(self):
        state = SessionState(stage=Stage.APPROACH)
        state, results = drive(state, StageTransition(3))
        assert state.stage is Stage.GRASP
        assert results[0].error is None


class TestIllegalTransitions:
    def test_jump_rejected_state_unchanged(self):
        state = SessionState()
        r = session_step(state, StageTransition(5))
        assert r.error is not None
        assert r.state == state
        # corrective echo of the authoritative stage
        assert StageTransition(1) in r.to_operator

    def test_full_transition_matrix(self):
        for current in Stage:
            for to in Stage:
                legal = (to == current + 1) or \
                        (current is Stage.DISPENSE and to is Stage.POSITION)
                state = SessionState(stage=current)
                r = session_step(state, StageTransition(int(to)))
                if legal:
                    assert r.error is None, (current, to)
                    assert r.state.stage is to
                else:
                    assert r.error is not None, (current, to)
                    assert r.state.stage is current

    def test_reposition_allowed(self):
        state = SessionState(stage=Stage.DISPENSE)
        r = session_step(state, StageTransition(4))
        assert r.error is None
        assert r.state.stage is Stage.POSITION

    def test_confirm_from_any_stage(self):
        for current in Stage:
            r = session_step(SessionState(stage=current),
                             ControlCmd(ControlCode.CONFIRM))
            assert r.state.stage is Stage.CONFIRM
            assert r.error is None


class TestTargetWeight:
    def test_only_in_stage_one(self):
        for stage in list(Stage)[1:]:
            state = SessionState(stage=stage)
            r = session_step(state, TargetWeight(100))
            assert r.error is not None
            assert r.state == state

    def test_sets_target_and_advances(self):
        r = session_step(SessionState(), TargetWeight(250))
        assert r.state.target_g == 2.5
        assert r.state.stage is Stage.APPROACH


class TestCollision:
    def test_active_stages_emit_exactly_one_vibration(self):
        for stage in (Stage.APPROACH, Stage.GRASP, Stage.POSITION,
                      Stage.DISPENSE):
            r = session_step(SessionState(stage=stage), CollisionEvent(200))
            vibs = [m for m in r.to_operator if isinstance(m, VibrationCmd)]
            assert len(vibs) == 1
            assert vibs[0].duties == (200,) * 8

    def test_inactive_stages_ignore(self):
        for stage in (Stage.SET_TARGET, Stage.CONFIRM):
            r = session_step(SessionState(stage=stage), CollisionEvent(200))
            assert not any(isinstance(m, VibrationCmd) for m in r.to_operator)


class TestDispenseAutoStop:
    def setup_dispense(self):
        return SessionState(stage=Stage.DISPENSE, target_g=1.0,
                            vibration_on=True)

    def test_auto_vib_stop_in_band(self):
        state = self.setup_dispense()
        r = session_step(state, MassUpdate(1.01))
        assert ControlCmd(ControlCode.VIB_STOP) in r.to_robot
        assert not r.state.vibration_on
        assert r.state.live_mass_g == 1.01

    def test_no_stop_outside_band(self):
        state = self.setup_dispense()
        r = session_step(state, MassUpdate(0.90))
        assert ControlCmd(ControlCode.VIB_STOP) not in r.to_robot
        assert r.state.vibration_on

    def test_stop_emitted_once(self):
        state = self.setup_dispense()
        r1 = session_step(state, MassUpdate(0.97))
        r2 = session_step(r1.state, MassUpdate(0.98))
        stops = [m for m in r1.to_robot + r2.to_robot
                 if m == ControlCmd(ControlCode.VIB_STOP)]
        assert len(stops) == 1

    def test_vib_start_gated_by_stage(self):
        r = session_step(SessionState(stage=Stage.POSITION),
                         ControlCmd(ControlCode.VIB_START))
        assert r.state.stage is Stage.DISPENSE
        assert r.state.vibration_on
        r2 = session_step(SessionState(stage=Stage.APPROACH),
                          ControlCmd(ControlCode.VIB_START))
        assert r2.error is not None
        assert r2.state.stage is Stage.APPROACH


class TestStreamBookkeeping:
    def test_sensor_seq_must_increase(self):
        state = SessionState()
        frame = SensorFrame(5, (0,) * 24)
        r = session_step(state, frame)
        assert r.state.last_seq == 5
        r2 = session_step(r.state, SensorFrame(5, (0,) * 24))
        assert r2.error is not None
        r3 = session_step(r.state, SensorFrame(6, (0,) * 24))
        assert r3.error is None

    def test_hello_echo_heartbeat_noop(self):
        r = session_step(SessionState(), Hello())
        assert Hello() in r.to_operator
        r2 = session_step(SessionState(), Heartbeat())
        assert r2.to_operator == [] and r2.to_robot == []
        r3 = session_step(SessionState(), Ack(1))
        assert r3.error is None


class TestDisconnect:
    def test_safe_stop(self):
        state = SessionState(stage=Stage.DISPENSE, vibration_on=True)
        r = session_step(state, Disconnect())
        assert r.state.safe_stopped
        assert not r.state.vibration_on
        assert ControlCmd(ControlCode.VIB_STOP) in r.to_robot


class TestReplayDeterminism:
    def test_event_log_replay_reproduces_state(self):
        events = [
            TargetWeight(100),
            SensorFrame(1, (0,) * 24),
            ControlCmd(ControlCode.MOVE_XP),
            ControlCmd(ControlCode.GRASP),
            CollisionEvent(80),
            GraspComplete(),
            ControlCmd(ControlCode.TILT_UP),
            ControlCmd(ControlCode.VIB_START),
            MassUpdate(0.5),
            MassUpdate(0.99),
            ControlCmd(ControlCode.CONFIRM),
        ]
        final1, _ = drive(SessionState(), *events)
        final2, _ = drive(SessionState(), *events)
        assert final1 == final2
        assert final1.stage is Stage.CONFIRM
