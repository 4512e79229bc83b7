import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

import agent
import machine
import prior
import qalg
import qsim
from config import AppConfig, default_config, load_config, resolve_seed
from errors import AlgorithmFailure, ArgumentError, QSpeedError, ResourceLimitError
from formats import load_oracle_table, load_programs, load_tm
from logging_conf import setup_logging
from records import dumps_record, to_payload, write_jsonl

log = logging.getLogger("cli")

MACHINES_DIR = Path(__file__).resolve().parent / "machines"
EXIT_OK, EXIT_VALIDATION, EXIT_RESOURCE, EXIT_FAILURE = 0, 1, 2, 3
_GLOBAL_KEYS = {"func", "json", "verbose", "config", "command_name"}


class UsageParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# --- shared helpers ---

def builtin_oracle(name: str, n: int) -> qsim.OracleSpec:
    if n < 1:
        raise ArgumentError(f"--n must be >= 1, got {n}")
    if name == "constant0":
        return qsim.OracleSpec(n, (0,) * (1 << n))
    if name == "balanced-bit0":
        return qsim.OracleSpec.from_function(n, lambda x: int(x[0]))
    if name.startswith("marked="):
        marked = [b for b in name.split("=", 1)[1].split(",") if b]
        return qsim.OracleSpec.marked(n, marked)
    raise ArgumentError(f"unknown oracle {name!r} (constant0, balanced-bit0, marked=<bits>[,<bits>])")


def resolve_oracle(args) -> qsim.OracleSpec:
    if args.oracle_table:
        return load_oracle_table(args.oracle_table)
    return builtin_oracle(args.oracle, args.n)


def resolve_machine(value: str) -> machine.Machine:
    if value == machine.SK2.machine_id:
        return machine.SK2
    path = Path(value)
    if not path.exists():
        candidate = MACHINES_DIR / f"{value}.tm"
        if not candidate.exists():
            raise ArgumentError(f"no machine {value!r}: give sk2, a TM file or a name under machines/")
        path = candidate
    return machine.TuringProgramMachine(load_tm(str(path)))


class Context:
    def __init__(self, args, cfg: AppConfig, seed: int):
        self.args = args
        self.cfg = cfg
        self.seed = seed
        self.strict = bool(args.strict_paper_mode or cfg.run.strict_paper_mode)
        self.repeats = max(1, int(args.repeats))

    def rng(self, repeat: int = 0) -> np.random.Generator:
        return qsim.derive_rng(self.seed, repeat)

    def machine(self) -> machine.Machine:
        return resolve_machine(self.args.machine)


# --- quantum commands ---

def cmd_dj(ctx: Context) -> Iterable[dict]:
    res = qalg.deutsch_jozsa(resolve_oracle(ctx.args))
    yield to_payload(res)


def cmd_dj_estimate(ctx: Context) -> Iterable[dict]:
    oracle = resolve_oracle(ctx.args)
    for r in range(ctx.repeats):
        est = qalg.estimate_fraction(oracle, ctx.args.epsilon, ctx.args.k, ctx.rng(r))
        yield dict(to_payload(est), repeat=r, true_fraction=oracle.count() / oracle.size)


def cmd_grover(ctx: Context) -> Iterable[dict]:
    oracle = resolve_oracle(ctx.args)
    cfg = ctx.cfg
    for r in range(ctx.repeats):
        rng = ctx.rng(r)
        solutions = ctx.args.solutions
        counted = None
        if solutions is None:
            counted = qalg.quantum_count(oracle, cfg.prior.precision, 0.1, rng)
            solutions = int(round(counted.m_hat))
            log.info("Grover: M estimated as %d by counting", solutions)
        res = qalg.grover_search(oracle, solutions, rng, max_retries=cfg.retries.grover, strict=ctx.strict)
        out = dict(to_payload(res), repeat=r, m_solutions=solutions)
        if counted is not None:
            out["count_estimate"] = to_payload(counted)
        yield out


def cmd_count(ctx: Context) -> Iterable[dict]:
    oracle = resolve_oracle(ctx.args)
    for r in range(ctx.repeats):
        est = qalg.quantum_count(oracle, ctx.args.precision, ctx.args.epsilon, ctx.rng(r))
        yield dict(to_payload(est), repeat=r)


def cmd_phase(ctx: Context) -> Iterable[dict]:
    args = ctx.args
    if args.gate == "pi8":
        unitary, omega = qsim.gate_matrix(qsim.pi8(0)), 1.0 / 8.0
    elif args.gate == "identity":
        unitary, omega = np.eye(2, dtype=np.complex128), 0.0
    else:
        omega = args.omega
        unitary = np.diag([1.0, np.exp(2j * math.pi * omega)])
    eigenstate = qsim.basis_state("1")
    for r in range(ctx.repeats):
        est = qalg.phase_estimate(unitary, eigenstate, args.precision, args.epsilon, ctx.rng(r))
        yield dict(to_payload(est), repeat=r, omega=omega,
                   error=qalg.circular_distance(est.phase, omega))


def cmd_qft(ctx: Context) -> Iterable[dict]:
    state = qsim.basis_state(ctx.args.bits)
    qubits = range(state.num_qubits)
    out = qalg.inverse_qft(state, qubits) if ctx.args.inverse else qalg.qft(state, qubits)
    yield {"bits": ctx.args.bits, "inverse": ctx.args.inverse, "amplitudes": out.amplitudes}


def cmd_shor(ctx: Context) -> Iterable[dict]:
    cfg = ctx.cfg
    for r in range(ctx.repeats):
        res = qalg.shor_run(
            ctx.args.number, ctx.rng(r),
            max_restarts=cfg.retries.shor_restarts,
            max_samples=cfg.retries.order_find,
            max_qubits=cfg.shor.max_qubits,
        )
        yield dict(to_payload(res), repeat=r, n_mod=ctx.args.number)


# --- machine commands ---

def _programs(args) -> List[str]:
    programs = list(args.programs)
    if args.program_file:
        programs += load_programs(args.program_file)
    if not programs:
        raise ArgumentError("no program given")
    return [machine.check_program(p) for p in programs]


def cmd_machine_run(ctx: Context) -> Iterable[dict]:
    m = ctx.machine()
    for program in _programs(ctx.args):
        out = m.run_bounded(program, ctx.args.budget, output_limit=ctx.args.output_limit)
        yield dict(to_payload(out), program=program, machine_id=m.machine_id)


def cmd_machine_tm(ctx: Context) -> Iterable[dict]:
    spec = load_tm(ctx.args.file)
    run = machine.run_tm(spec, ctx.args.tape, ctx.args.budget)
    yield {
        "machine": spec.name,
        "status": run.status,
        "steps": run.config.steps_used,
        "state": run.config.state,
        "head": run.config.head,
        "tape": machine.tape_string(run.config, spec.blank),
    }


def cmd_kolmogorov(ctx: Context) -> Iterable[dict]:
    m = ctx.machine()
    length = machine.kolmogorov_bounded(ctx.args.x, ctx.args.max_len, ctx.args.phase, m)
    yield {"x": ctx.args.x, "max_len": ctx.args.max_len, "phase": ctx.args.phase,
           "length": length, "machine_id": m.machine_id}


# --- prior commands ---

def _prior_params(ctx: Context) -> Dict:
    cfg = ctx.cfg.prior
    args = ctx.args
    return {
        "epsilon": args.epsilon if args.epsilon is not None else cfg.epsilon,
        "k": args.k if args.k is not None else cfg.k,
        "m": args.precision if args.precision is not None else cfg.precision,
        "enumeration_cap": cfg.enumeration_cap,
        "strict": ctx.strict,
    }


def cmd_prior_estimate(ctx: Context) -> Iterable[dict]:
    method = {"classical": prior.PriorMethod.CLASSICAL, "qcount": prior.PriorMethod.QCOUNT,
              "dj": prior.PriorMethod.DJ_SAMPLING}[ctx.args.method]
    m = ctx.machine()
    repeats = 1 if method == prior.PriorMethod.CLASSICAL else ctx.repeats
    for r in range(repeats):
        est = prior.estimate(ctx.args.x, method, machine=m, rng=ctx.rng(r), **_prior_params(ctx))
        yield dict(to_payload(est), repeat=r)


def cmd_prior_conditional(ctx: Context) -> Iterable[dict]:
    method = prior.PriorMethod[ctx.args.method.upper()]
    m = ctx.machine()
    for r in range(1 if method == prior.PriorMethod.CLASSICAL else ctx.repeats):
        est = prior.conditional(ctx.args.y, ctx.args.x, method, machine=m, rng=ctx.rng(r), **_prior_params(ctx))
        yield dict(to_payload(est), repeat=r)


def cmd_prior_quasi(ctx: Context) -> Iterable[dict]:
    args = ctx.args
    m = ctx.machine()
    params = _prior_params(ctx)
    if args.gap_table:
        rows = prior.quasi_gap_table(args.max_len, m, params["enumeration_cap"])
        yield {"machine_id": m.machine_id, "max_len": args.max_len, "rows": rows}
        return
    if args.x is None:
        raise ArgumentError("prior quasi needs X (and optionally Y) unless --gap-table is given")
    y = args.y or ""
    exact = prior.quasi_conditional_classical(args.x, y, m, params["enumeration_cap"])
    for r in range(ctx.repeats):
        est = prior.quasi_conditional(args.x, y, params["epsilon"], params["k"], ctx.rng(r), m,
                                      params["enumeration_cap"], params["strict"])
        yield dict(to_payload(est), repeat=r, exact_value=exact.value)


def cmd_laplace(ctx: Context) -> Iterable[dict]:
    args = ctx.args
    if args.history is not None:
        p = prior.laplace_predict(args.history)
        n_ones, n_total = args.history.count("1"), len(args.history)
    else:
        if args.ones is None or args.total is None:
            raise ArgumentError("laplace needs --history or both --ones and --total")
        n_ones, n_total = args.ones, args.total
        p = prior.laplace_rule(n_ones, n_total)
    yield {"n_ones": n_ones, "n_total": n_total, "p_one": float(p), "p_zero": float(1 - p),
           "exact": f"{p.numerator}/{p.denominator}"}


# --- agent commands ---

ENV_KINDS = {
    "pattern": agent.EnvKind.DETERMINISTIC_PATTERN,
    "coin": agent.EnvKind.BIASED_COIN,
    "match-last": agent.EnvKind.MATCH_LAST_OBSERVATION,
}
AGENT_KINDS = {
    "aixi-spd": agent.AgentKind.AIXI_SPD,
    "aixiq": agent.AgentKind.AIXIQ,
    "laplace": agent.AgentKind.LAPLACE_BASELINE,
    "random": agent.AgentKind.RANDOM,
}


CONDITIONINGS = {
    "relative": agent.Conditioning.RELATIVE_REWARD,
    "context": agent.Conditioning.ACTION_CONTEXT,
}


def cmd_agent_act(ctx: Context) -> Iterable[dict]:
    args = ctx.args
    acfg = ctx.cfg.agent
    history = agent.PerceptHistory.decode(args.percepts, args.actions)
    # without --horizon the decision looks two steps past the history
    horizon = args.horizon if args.horizon is not None else len(history) + 2
    conditioning = CONDITIONINGS[args.conditioning]
    cap = ctx.cfg.prior.enumeration_cap
    m = ctx.machine()
    for r in range(ctx.repeats):
        if args.kind == "aixiq":
            eps = args.epsilon if args.epsilon is not None else acfg.epsilon_override
            decision = agent.aixiq_action(history, agent.BINARY, horizon, eps, acfg.k_confidence,
                                          ctx.rng(r), m, conditioning, args.window, args.lookahead,
                                          acfg.tree_budget, cap)
        else:
            decision = agent.aixi_spd_action(history, agent.BINARY, horizon, machine=m, conditioning=conditioning,
                                             window=args.window, lookahead=args.lookahead,
                                             tree_budget=acfg.tree_budget, enumeration_cap=cap)
        yield dict(to_payload(decision), repeat=r, horizon=horizon)


def cmd_agent_episode(ctx: Context) -> Iterable[dict]:
    args = ctx.args
    acfg = ctx.cfg.agent
    env = agent.EnvironmentSpec(ENV_KINDS[args.env], horizon=args.steps, pattern=args.pattern, bias=args.bias)
    m = ctx.machine()
    eps = args.epsilon if args.epsilon is not None else acfg.epsilon_override
    for r in range(ctx.repeats):
        episode = agent.run_episode(
            env, AGENT_KINDS[args.agent], args.steps, ctx.rng(r), seed=ctx.seed, machine=m,
            window=acfg.episode_window, lookahead=acfg.episode_lookahead, tree_budget=acfg.tree_budget,
            epsilon_override=eps, k_confidence=acfg.k_confidence, progress=ctx.cfg.run.progress,
            conditioning=CONDITIONINGS[args.conditioning], enumeration_cap=ctx.cfg.prior.enumeration_cap,
        )
        if args.log:
            path = args.log if ctx.repeats == 1 else f"{args.log}.{r}"
            write_jsonl(path, episode.steps)
        yield {"repeat": r, "env": env.kind, "agent": args.agent, "total_reward": episode.total_reward,
               "mean_reward": episode.mean_reward, "steps": episode.steps}


# --- parser ---

def _common_flags(parser: argparse.ArgumentParser, suppress: bool):
    default = (lambda value: argparse.SUPPRESS) if suppress else (lambda value: value)
    parser.add_argument("--seed", type=int, default=default(None), help="Base seed (else QSP_SEED, config, 0).")
    parser.add_argument("--json", action="store_true", default=default(False), help="JSON records only.")
    parser.add_argument("--strict-paper-mode", action="store_true", default=default(False),
                        help="Use the verbatim branches (Grover ceil count, empty-string priors, DJ weight).")
    parser.add_argument("--max-qubits", type=int, default=default(None), help="Simulator qubit cap.")
    parser.add_argument("--machine", default=default("sk2"), help="sk2, a TM file or a name under machines/.")
    parser.add_argument("--config", default=default(None), help="YAML config file.")
    parser.add_argument("--repeats", type=int, default=default(1), help="Derived-seed repeats.")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False), help="INFO logging.")


def _oracle_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--oracle", default="constant0", help="constant0, balanced-bit0 or marked=<bits>[,<bits>].")
    parser.add_argument("--n", type=int, default=3, help="Oracle arity.")
    parser.add_argument("--oracle-table", default=None, help="File with one 'input output' pair per line.")


def _prior_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--k", type=float, default=None)
    parser.add_argument("--precision", type=int, default=None, help="Counting precision bits m.")


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="qspeed", description="Quantum speed-prior workbench.")
    _common_flags(parser, suppress=False)
    common = UsageParser(add_help=False)
    _common_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command_name", required=True)

    def leaf(container, name: str, func: Callable, help_text: str) -> argparse.ArgumentParser:
        p = container.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        return p

    p = leaf(sub, "dj", cmd_dj, "Deutsch-Jozsa: constant or balanced.")
    _oracle_flags(p)

    p = leaf(sub, "dj-estimate", cmd_dj_estimate, "Estimate L/2^n with modified Deutsch-Jozsa trials.")
    _oracle_flags(p)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--k", type=float, default=3.0)

    p = leaf(sub, "grover", cmd_grover, "Grover search.")
    _oracle_flags(p)
    p.add_argument("--solutions", type=int, default=None, help="Known M; counted when absent.")

    p = leaf(sub, "count", cmd_count, "Quantum counting.")
    _oracle_flags(p)
    p.add_argument("--precision", type=int, default=6)
    p.add_argument("--epsilon", type=float, default=0.1)

    p = leaf(sub, "phase", cmd_phase, "Phase estimation of diag(1, e^{2 pi i omega}) on |1>.")
    p.add_argument("--omega", type=float, default=0.125)
    p.add_argument("--gate", choices=["pi8", "identity"], default=None)
    p.add_argument("--precision", type=int, default=3)
    p.add_argument("--epsilon", type=float, default=0.1)

    p = leaf(sub, "qft", cmd_qft, "QFT of a basis state.")
    p.add_argument("bits")
    p.add_argument("--inverse", action="store_true")

    p = leaf(sub, "shor", cmd_shor, "Factor N.")
    p.add_argument("number", type=int)

    mach = sub.add_parser("machine", help="Program and Turing-machine runs.")
    mach_sub = mach.add_subparsers(dest="machine_command", required=True)
    p = leaf(mach_sub, "run", cmd_machine_run, "Run programs for a bounded number of steps.")
    p.add_argument("programs", nargs="*")
    p.add_argument("--program-file", default=None)
    p.add_argument("--budget", type=int, default=16)
    p.add_argument("--output-limit", type=int, default=machine.DEFAULT_OUTPUT_LIMIT)
    p = leaf(mach_sub, "tm", cmd_machine_tm, "Run a TM file on a tape.")
    p.add_argument("file")
    p.add_argument("--tape", default="")
    p.add_argument("--budget", type=int, default=1000)

    p = leaf(sub, "kolmogorov", cmd_kolmogorov, "Bounded Kolmogorov complexity by enumeration.")
    p.add_argument("x")
    p.add_argument("--max-len", type=int, default=8)
    p.add_argument("--phase", type=int, default=10)

    pr = sub.add_parser("prior", help="Speed-prior estimates.")
    pr_sub = pr.add_subparsers(dest="prior_command", required=True)
    for name in ("classical", "qcount", "dj"):
        p = leaf(pr_sub, name, cmd_prior_estimate, f"S(x) by the {name} method.")
        p.add_argument("x")
        _prior_flags(p)
        p.set_defaults(method=name)
    p = leaf(pr_sub, "conditional", cmd_prior_conditional, "S(y | x) = S(xy) / S(x).")
    p.add_argument("y")
    p.add_argument("x", nargs="?", default="")
    p.add_argument("--method", choices=["classical", "qcount", "dj_sampling"], default="classical")
    _prior_flags(p)
    p = leaf(pr_sub, "quasi", cmd_prior_quasi, "Quasi-conditional S'(x, y).")
    p.add_argument("x", nargs="?", default=None)
    p.add_argument("y", nargs="?", default="")
    p.add_argument("--gap-table", action="store_true", help="Emit |S'(x,y) - S(x|y)| for all short x, y.")
    p.add_argument("--max-len", type=int, default=2)
    _prior_flags(p)

    p = leaf(sub, "laplace", cmd_laplace, "Rule of succession.")
    p.add_argument("--history", default=None)
    p.add_argument("--ones", type=int, default=None)
    p.add_argument("--total", type=int, default=None)

    ag = sub.add_parser("agent", help="AIXI-Spd / AIXIq.")
    ag_sub = ag.add_subparsers(dest="agent_command", required=True)
    p = leaf(ag_sub, "act", cmd_agent_act, "One decision for a given history.")
    p.add_argument("--percepts", default="", help="Encoded o r blocks.")
    p.add_argument("--actions", default="", help="Encoded actions.")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--kind", choices=["aixi-spd", "aixiq"], default="aixi-spd")
    p.add_argument("--epsilon", type=float, default=None, help="AIXIq epsilon override.")
    p.add_argument("--window", type=int, default=None, help="Keep only the last steps of the history.")
    p.add_argument("--lookahead", type=int, default=None, help="Search depth short of the horizon.")
    p.add_argument("--conditioning", choices=sorted(CONDITIONINGS), default="relative")
    p = leaf(ag_sub, "episode", cmd_agent_episode, "Play an environment.")
    p.add_argument("--env", choices=sorted(ENV_KINDS), default="pattern")
    p.add_argument("--agent", choices=sorted(AGENT_KINDS), default="random")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--pattern", default="01")
    p.add_argument("--bias", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=None, help="AIXIq epsilon override.")
    p.add_argument("--conditioning", choices=sorted(CONDITIONINGS), default="relative")
    p.add_argument("--log", default=None, help="Write the episode as JSONL.")
    return parser


def _command_name(args) -> str:
    parts = [args.command_name]
    for key in ("machine_command", "prior_command", "agent_command"):
        if getattr(args, key, None):
            parts.append(getattr(args, key))
    return " ".join(parts)


def _params(args) -> Dict:
    return {k: v for k, v in sorted(vars(args).items())
            if k not in _GLOBAL_KEYS and not k.endswith("_command")}


def _emit(record: dict, human: bool):
    sys.stdout.buffer.write(dumps_record(record) + b"\n")
    sys.stdout.flush()
    if human:
        scalars = {k: v for k, v in record["result"].items() if isinstance(v, (int, float, str, bool)) or v is None}
        print(f"{record['command']}: " + ", ".join(f"{k}={v}" for k, v in scalars.items()), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(verbose=args.verbose)
    command = _command_name(args)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        seed = resolve_seed(args.seed, cfg)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    qsim.set_limits(
        max_qubits=args.max_qubits if args.max_qubits is not None else cfg.sim.max_qubits,
        norm_tolerance=cfg.sim.norm_tolerance,
        unitary_tolerance=cfg.sim.unitary_tolerance,
    )
    ctx = Context(args, cfg, seed)
    base = {"command": command, "params": to_payload(_params(args)), "seed": seed}
    log.info("%s seed=%d", command, seed)

    try:
        started = time.time()
        for result in args.func(ctx):
            now = time.time()
            _emit(dict(base, started=started, elapsed=now - started, result=to_payload(result)), not args.json)
            started = now
    except AlgorithmFailure as e:
        sys.stdout.buffer.write(dumps_record(dict(base, error=str(e), attempts=e.attempts)) + b"\n")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except ResourceLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (QSpeedError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
