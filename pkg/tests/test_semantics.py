"""Configuration, queue, and system transitions plus the progress checker."""

from fractions import Fraction

import pytest

from timedsessions.constraints import zero_valuation
from timedsessions.errors import ProtocolError
from timedsessions.parser import parse_type
from timedsessions.semantics import (
    Config,
    ExploreLimits,
    Message,
    QConfig,
    System,
    admissible_delays,
    check_progress,
    compatible,
    config_comm_steps,
    config_tick,
    enqueue,
    is_future_enabled,
    make_system,
    qconfig_steps,
    qconfig_time,
    system_steps,
    unfold_head,
)
from timedsessions.sessiontypes import (
    check_well_formed,
    Choice,
    NONE,
    RECV,
    SEND,
    STR,
    dual,
)

F = Fraction

WEAK_PERSISTENCY = "{ !data<Str>(x<3).end , ?timeout(x>4).end }"
UNSAFE_LEFT = "{ ?a(x<5).end , !b(x=0).end }"
UNSAFE_RIGHT = "{ !a(x<5).end , ?b(x=0).end }"
PING_PONG = "rec t . { ?ping(x<=3,{x}).t , !pong(x>3,{x}).t }"


def nu0(*clocks):
    return zero_valuation(clocks or ("x",))


def test_unfold_head_single_substitution():
    node = parse_type("rec a . { ?d(x<=1).end , !e(1<x).a }")
    head = unfold_head(node)
    assert isinstance(head, Choice)
    assert head.options[1].continuation == node


def test_unfold_head_end():
    node = parse_type("end")
    assert unfold_head(node) == node


def test_unfold_head_nested_rec_closes_vars():
    node = parse_type("rec a . rec b . { ?d(x<=1).a , !e(1<x).b }")
    head = unfold_head(node)
    assert isinstance(head, Choice)

    def free_vars(n, bound=frozenset()):
        from timedsessions.sessiontypes import Choice as C, Rec as R, Var as V

        if isinstance(n, V):
            return set() if n.var in bound else {n.var}
        if isinstance(n, R):
            return free_vars(n.body, bound | {n.var})
        if isinstance(n, C):
            out = set()
            for opt in n.options:
                out |= free_vars(opt.continuation, bound)
            return out
        return set()

    assert free_vars(head) == set()


def test_config_comm_steps_mixed_enabled_at_zero():
    steps = config_comm_steps(Config(nu0(), parse_type(UNSAFE_LEFT)))
    assert {(a.direction, a.message.label) for a, _ in steps} == \
        {(RECV, "a"), (SEND, "b")}


def test_config_comm_steps_gap_at_four():
    steps = config_comm_steps(
        Config({"x": F(4)}, parse_type(WEAK_PERSISTENCY)))
    assert steps == []


def test_config_comm_steps_end():
    assert config_comm_steps(Config(nu0(), parse_type("end"))) == []


def test_config_comm_steps_applies_resets():
    steps = config_comm_steps(Config({"x": F(2)}, parse_type("!a(x<3,{x}).end")))
    [(action, config)] = steps
    assert config.nu == {"x": F(0)}


def test_config_tick():
    config = config_tick(Config(nu0("x", "y"), parse_type("end")), F(2))
    assert config.nu == {"x": F(2), "y": F(2)}
    same = config_tick(config, F(0))
    assert same.nu == config.nu
    twice = config_tick(config_tick(config, F(1)), F(2))
    assert twice.nu == config_tick(config, F(3)).nu


def test_future_enabled_examples():
    assert is_future_enabled(QConfig(nu0(), parse_type(WEAK_PERSISTENCY)))
    # past(2<x<5) = x<5 fails at x=10 (checked against the delay oracle)
    assert not is_future_enabled(QConfig({"x": F(10)},
                                         parse_type("?c(2<x<5).end")))
    assert not is_future_enabled(QConfig(nu0(), parse_type("end")))


def test_qconfig_recv_consumes_head():
    qc = QConfig(nu0(), parse_type(UNSAFE_LEFT), (Message("a", NONE),))
    steps = qconfig_steps(qc)
    recvs = [(a, q) for a, q in steps if a.direction == RECV]
    assert len(recvs) == 1
    _, after = recvs[0]
    assert after.queue == ()


def test_enqueue_appends():
    qc = QConfig(nu0(), parse_type("end"))
    assert enqueue(qc, Message("m", NONE)).queue == (Message("m", NONE),)


def test_orphan_message_has_no_recv():
    qc = QConfig(nu0(), parse_type("end"), (Message("m", NONE),))
    assert qconfig_steps(qc) == []


def test_sort_mismatch_is_protocol_error():
    qc = QConfig(nu0(), parse_type("?a<Nat>(x<5).end"), (Message("a", STR),))
    with pytest.raises(ProtocolError):
        qconfig_steps(qc)


def test_qconfig_time_weak_persistency_allows_timeout_branch():
    qc = QConfig(nu0(), parse_type(WEAK_PERSISTENCY))
    after, reason = qconfig_time(qc, F(5))
    assert reason is None
    assert after.nu == {"x": F(5)}


def test_qconfig_time_urgency_blocks_receivable_head():
    qc = QConfig(nu0(), dual(parse_type(WEAK_PERSISTENCY)),
                 (Message("data", STR),))
    blocked, reason = qconfig_time(qc, F(1))
    assert blocked is None and reason == "urgency"


def test_qconfig_time_urgency_vacuous_when_head_not_yet_receivable():
    # the receive guard 2<x<5 opens only later; waiting 1 never crosses it
    qc = QConfig(nu0(), parse_type("?c(2<x<5).end"), (Message("c", NONE),))
    ok, reason = qconfig_time(qc, F(1))
    assert reason is None
    # but waiting past the opening is refused
    blocked, reason = qconfig_time(qc, F(3))
    assert blocked is None and reason == "urgency"


def test_qconfig_time_persistency_refusal():
    qc = QConfig(nu0(), parse_type("?c(2<x<5).end"))
    blocked, reason = qconfig_time(qc, F(6))
    assert blocked is None and reason == "persistency"


def test_qconfig_time_end_vacuous():
    qc = QConfig(nu0(), parse_type("end"))
    after, reason = qconfig_time(qc, F(9))
    assert reason is None and after.nu == {"x": F(9)}


def test_wait_determinism():
    qc = QConfig(nu0(), parse_type(WEAK_PERSISTENCY))
    one, _ = qconfig_time(qc, F(2))
    two, _ = qconfig_time(one, F(3))
    direct, _ = qconfig_time(qc, F(5))
    assert two.nu == direct.nu and two.node == direct.node


def test_system_steps_crossed_sends():
    sys = make_system(parse_type(UNSAFE_LEFT), parse_type(UNSAFE_RIGHT))
    kinds = {(a.kind, a.message.label if a.message else None)
             for a, _ in system_steps(sys)}
    assert ("comm-l", "b") in kinds
    assert ("comm-r", "a") in kinds


def test_system_steps_final_final():
    sys = make_system(parse_type("end"), parse_type("end"))
    assert system_steps(sys) == []


def test_system_par_after_comm():
    sys = make_system(parse_type("!m(x<5).end"), parse_type("?m(x<5).end"))
    comm = [(a, s) for a, s in system_steps(sys) if a.kind == "comm-l"]
    [(_, delivered)] = comm
    assert delivered.right.queue == (Message("m", NONE),)
    par = [(a, s) for a, s in system_steps(delivered) if a.kind == "recv-r"]
    assert len(par) == 1
    [(_, drained)] = par
    assert drained.right.queue == ()


def test_admissible_delays_ping_pong():
    sys = make_system(parse_type(PING_PONG), dual(parse_type(PING_PONG)))
    delays = admissible_delays(sys, F(10))
    for expected in (F(3, 2), F(3), F(4)):
        assert expected in delays
    assert F(0) not in delays


def test_admissible_delays_trivial_ends():
    sys = make_system(parse_type("end"), parse_type("end"))
    assert admissible_delays(sys, F(10)) == [F(1)]


def test_admissible_delays_empty_when_head_receivable():
    left = QConfig(nu0(), dual(parse_type(WEAK_PERSISTENCY)),
                   (Message("data", STR),))
    right = QConfig(nu0(), parse_type(WEAK_PERSISTENCY))
    sys = System(left, right)
    assert admissible_delays(sys, F(10)) == []


def test_compatible_dual_pair():
    for text in (WEAK_PERSISTENCY, PING_PONG, "end"):
        sys = make_system(parse_type(text), dual(parse_type(text)))
        ok, why = compatible(sys)
        assert ok, why


def test_compatible_rejects_two_nonempty_queues():
    left = QConfig(nu0(), parse_type("end"), (Message("a", NONE),))
    right = QConfig(nu0(), parse_type("end"), (Message("b", NONE),))
    ok, why = compatible(System(left, right))
    assert not ok and "both queues" in why


def test_compatible_after_one_comm():
    sys = make_system(parse_type("!m(x<5).end"), dual(parse_type("!m(x<5).end")))
    [(_, delivered)] = [(a, s) for a, s in system_steps(sys)
                        if a.kind == "comm-l"]
    ok, why = compatible(delivered)
    assert ok, why


def test_compatible_needs_equal_valuations():
    left = QConfig({"x": F(1)}, parse_type("!m(x<5).end"))
    right = QConfig({"x": F(2)}, dual(parse_type("!m(x<5).end")))
    ok, why = compatible(System(left, right))
    assert not ok and "valuations" in why


def test_progress_weak_persistency_ok():
    s = parse_type(WEAK_PERSISTENCY)
    report = check_progress(make_system(s, dual(s)), monitor=True)
    assert report.verdict == "ok"
    assert report.invariant_violations == []


def test_progress_unsafe_mixed_choice_counterexample():
    sys = make_system(parse_type(UNSAFE_LEFT), parse_type(UNSAFE_RIGHT))
    report = check_progress(sys)
    assert report.verdict == "counterexample"
    # the offending run crosses the two sends
    kinds = [a.kind for a, _ in report.trace]
    assert "comm-l" in kinds and "comm-r" in kinds


def test_progress_end_end():
    report = check_progress(make_system(parse_type("end"), parse_type("end")))
    assert report.verdict == "ok"
    assert report.states_visited == 1


def test_progress_free_send_loop_is_bound_exceeded():
    # a recursive sender may flood its peer's queue without ever waiting, so
    # the reachable queue lengths are unbounded; the bounded checker must say
    # so rather than claim ok
    s = parse_type(PING_PONG)
    report = check_progress(make_system(s, dual(s)))
    assert report.verdict == "bound-exceeded"
    assert "queue" in report.reason


MIXED_PING_PONG = ("rec t . { ?ping(x<=3,{x}).{ !pong(x<=3,{x}).t , "
                   "?timeout(x>3).end } , !pong(x>3,{x}).{ ?ping(x<=3,{x}).t"
                   " , !timeout(x>3).end } }")


def test_progress_mixed_ping_pong_ok():
    # sends alternate with receives here, so queues stay bounded and the
    # exploration closes
    s = parse_type(MIXED_PING_PONG)
    assert check_well_formed(s).verdict
    report = check_progress(make_system(s, dual(s)), monitor=True)
    assert report.verdict == "ok"
    assert report.invariant_violations == []


def test_progress_orphan_is_counterexample():
    left = QConfig(nu0(), parse_type("end"), (Message("m", NONE),))
    right = QConfig(nu0(), parse_type("end"))
    report = check_progress(System(left, right))
    assert report.verdict == "counterexample"


def test_progress_unbounded_sender_exceeds_bounds():
    sender = parse_type("rec a . !m(true).a")
    report = check_progress(make_system(sender, parse_type("end")),
                            ExploreLimits(max_queue=4))
    assert report.verdict == "bound-exceeded"


def test_progress_fifo_order():
    # two sends deliver in order; the receiver consumes oldest first
    s = parse_type("!a(x<9).!b(x<9).end")
    r = parse_type("?a(x<9).?b(x<9).end")
    sys = make_system(s, r)
    [(_, s1)] = [(a, st) for a, st in system_steps(sys) if a.kind == "comm-l"]
    [(_, s2)] = [(a, st) for a, st in system_steps(s1) if a.kind == "comm-l"]
    assert [m.label for m in s2.right.queue] == ["a", "b"]
    [(_, s3)] = [(a, st) for a, st in system_steps(s2) if a.kind == "recv-r"]
    assert [m.label for m in s3.right.queue] == ["b"]


def test_urgency_boundary_with_open_guard():
    # a queued message whose receive guard opens strictly later: waiting up
    # to the boundary is allowed, waiting across it is not, and at the
    # boundary itself the system is genuinely stuck (the guard is still
    # false but every positive wait passes a receivable instant)
    qc = QConfig(nu0(), parse_type("?m(2<x<5).end"), (Message("m", NONE),))
    ok, _ = qconfig_time(qc, F(2))
    assert ok is not None
    refused, reason = qconfig_time(qc, F(7, 2))
    assert refused is None and reason == "urgency"

    at_boundary = QConfig({"x": F(2)}, parse_type("?m(2<x<5).end"),
                          (Message("m", NONE),))
    assert qconfig_steps(at_boundary) == []
    blocked, reason = qconfig_time(at_boundary, F(1))
    assert blocked is None and reason == "urgency"

    sender = QConfig({"x": F(2)}, parse_type("end"))
    report = check_progress(System(at_boundary, sender))
    assert report.verdict == "counterexample"
