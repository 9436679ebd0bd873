import argparse
import json
import logging
import sys
from dataclasses import replace

from .benchmark import BenchConfig, benchmark, summarize, summary_records, write_csv, write_jsonl
from .citest import KINDS, CISource, Dataset
from .exceptions import AMPCGError, InputFormatError, PreconditionError, UsageError
from .graph import chain_components, format_graph, is_amp_cg, read_graph, triplexes, write_graph
from .learning import ALGORITHMS, LearnConfig, UIGMethod, pattern, run_learner
from .metrics import metrics
from .rdf import write_turtle
from .separation import (NotSeparable, SeparationQuery, enumerate_minimal_separators, find_minimal_separator,
                         is_minimal_separator, minimal_separator_sets, p_separated_aug, p_separated_pathwise,
                         restricted_minimal_separator, restricted_separator)
from .synth import GenConfig, parametrize, random_amp_cg, sample
from .utils import format_set, parse_list

logger = logging.getLogger(__name__)

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3
MINSEP_MODES = ("test", "find", "restricted", "restricted-min", "sets", "enumerate", "check")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def define_args():
    common = _Parser(add_help=False)
    common.add_argument("--verbose", "-v", action="count", default=0, help="-v for progress, -vv for every removal")
    common.add_argument("--json", action="store_true", help="Structured JSON on stdout")

    parser = _Parser(prog="ampcg", description="Separators and structure learning for AMP chain graphs")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    minsep = sub.add_parser("minsep", parents=[common], help="Minimal p-separators")
    minsep.add_argument("mode", choices=MINSEP_MODES)
    minsep.add_argument("--graph", "-g", required=True, help="Graph file, - for stdin")
    minsep.add_argument("--u", help="First vertex")
    minsep.add_argument("--v", help="Second vertex")
    minsep.add_argument("--z", help="Candidate separator for 'test' and 'check', e.g. a,b")
    minsep.add_argument("--s", help="Allowed vertices for 'restricted' and 'restricted-min'")
    minsep.add_argument("--x", help="Vertex set X for 'sets' and 'check'")
    minsep.add_argument("--y", help="Vertex set Y for 'sets' and 'check'")
    minsep.add_argument("--pathwise", action="store_true", help="'check' with the chain criterion")

    learn = sub.add_parser("learn", parents=[common], help="Learn an AMP chain graph")
    learn.add_argument("--algo", choices=list(ALGORITHMS), default="stable")
    learn.add_argument("--alpha", type=float, default=0.01, help="Significance level of the CI tests")
    learn.add_argument("--order", help="Variable order, e.g. a,b,c")
    learn.add_argument("--max-sepset", type=int, help="Largest conditioning set size")
    source = learn.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", help="CSV dataset, - for stdin")
    source.add_argument("--oracle", help="Graph file answering CI queries by p-separation")
    learn.add_argument("--kind", choices=KINDS, help="Override the detected dataset kind")
    learn.add_argument("--uig", help="UIG method for lcd: gaussian, full-cond, oracle or file:PATH")
    learn.add_argument("--emit-tree", help="Write the lcd separation tree as JSON")
    learn.add_argument("--out", "-o", default="-", help="Learned graph path, - for stdout")
    learn.add_argument("--report", help="Write the JSON run report to this path")
    learn.add_argument("--threads", type=int, default=1)
    learn.add_argument("--rdf", help="Also write the learned graph as Turtle")

    gen = sub.add_parser("gen", parents=[common], help="Random AMP chain graph")
    gen.add_argument("--p", type=int, required=True, help="Number of vertices")
    gen.add_argument("--N", type=float, required=True, help="Expected vertex degree")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", "-o", default="-")
    gen.add_argument("--rdf", help="Also write the graph as Turtle")

    smp = sub.add_parser("sample", parents=[common], help="Gaussian sample from a graph")
    smp.add_argument("--graph", "-g", required=True)
    smp.add_argument("--n", type=int, required=True, help="Sample size")
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--out", "-o", default="-", help="CSV path, - for stdout")

    ev = sub.add_parser("eval", parents=[common], help="Compare a learned graph with the truth")
    ev.add_argument("--learned", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--pattern", action="store_true", help="Score against the pattern of the truth")

    bench = sub.add_parser("bench", parents=[common], help="Seeded benchmark grid")
    bench.add_argument("--config", "-c", required=True, help="key=value or JSON grid file")
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--out", "-o", default="-", help="JSON lines report, - for stdout")
    bench.add_argument("--csv", help="Summary CSV path")
    bench.add_argument("--seed", type=int, help="Override the grid seed")
    bench.add_argument("--timings", action="store_true", help="Include elapsed_ms in run records")

    info = sub.add_parser("graph", parents=[common], help="Describe a graph file")
    info.add_argument("--graph", "-g", required=True)
    info.add_argument("--rdf", help="Write the graph as Turtle")

    return parser


def _emit(args, data, lines):
    if args.json:
        sys.stdout.write(json.dumps(dict({"schema": SCHEMA}, **data), sort_keys=True) + "\n")
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"minsep {args.mode} needs " + ", ".join("--" + n for n in missing))


def _as_list(s):
    return None if s is None else sorted(s)


def cmd_minsep(args):
    g = read_graph(args.graph)
    mode = args.mode
    if mode == "test":
        _need(args, "u", "v", "z")
        minimal = is_minimal_separator(g, args.u, args.v, parse_list(args.z))
        _emit(args, {"minimal": minimal}, [f"minimal: {str(minimal).lower()}"])
    elif mode == "check":
        _need(args, "x", "y")
        q = SeparationQuery.of(parse_list(args.x), parse_list(args.y), parse_list(args.z))
        separated = p_separated_pathwise(g, q) if args.pathwise else p_separated_aug(g, q)
        _emit(args, {"separated": separated}, [f"separated: {str(separated).lower()}"])
    elif mode == "enumerate":
        _need(args, "u", "v")
        found = enumerate_minimal_separators(g, args.u, args.v)
        _emit(args, {"separators": [sorted(s) for s in found]}, [format_set(s) for s in found])
    elif mode == "sets":
        _need(args, "x", "y")
        Z = minimal_separator_sets(g, parse_list(args.x), parse_list(args.y))
        _emit(args, {"separator": sorted(Z)}, [format_set(Z)])
    else:
        _need(args, "u", "v")
        if mode == "find":
            Z = find_minimal_separator(g, args.u, args.v)
        else:
            _need(args, "s")
            solve = restricted_separator if mode == "restricted" else restricted_minimal_separator
            Z = solve(g, args.u, args.v, parse_list(args.s))
        shown = "NotSeparable" if Z is NotSeparable else format_set(Z)
        _emit(args, {"separator": None if Z is NotSeparable else _as_list(Z)}, [shown])
    return EXIT_OK


def _load_source(args):
    if args.oracle:
        return CISource.oracle(read_graph(args.oracle))
    path = sys.stdin if args.data == "-" else args.data
    return CISource.from_dataset(Dataset.read_csv(path, args.kind), args.alpha)


def cmd_learn(args):
    if args.emit_tree and args.algo != "lcd":
        raise UsageError("--emit-tree needs --algo lcd")
    if args.uig and args.algo != "lcd":
        raise UsageError("--uig needs --algo lcd")
    src = _load_source(args)
    cfg = LearnConfig(
        alpha=args.alpha,
        variable_order=parse_list(args.order),
        max_sepset_size=args.max_sepset,
        threads=args.threads,
    )
    uig = UIGMethod.parse(args.uig) if args.uig else None
    logger.info("##### Start learning with %s", args.algo)
    result = run_learner(args.algo, src, cfg, uig)
    skel = result.prune if args.algo == "lcd" else result.skeleton
    removals = {str(level): count for level, count in sorted(skel.removals_per_level().items())}
    report = {
        "algo": args.algo,
        "query_count": result.query_count,
        "elapsed_ms": int(round(result.elapsed * 1000)),
        "removals_per_level": removals,
        "conflicts": list(result.conflicts),
    }
    if args.algo == "lcd":
        report["tree_nodes"] = len(result.tree.nodes)
        if args.emit_tree:
            result.tree.write_json(args.emit_tree)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(dict({"schema": SCHEMA}, **report), f, sort_keys=True, indent=2)
            f.write("\n")
        logger.info("##### Saved run report to: %s", args.report)
    if args.rdf:
        write_turtle(result.graph, args.rdf)
    if args.json:
        if args.out != "-":
            write_graph(result.graph, args.out)
        _emit(args, dict(report, graph=format_graph(result.graph).splitlines()), [])
    else:
        write_graph(result.graph, args.out)
    return EXIT_OK


def cmd_gen(args):
    g = random_amp_cg(GenConfig(args.p, args.N, args.seed))
    write_graph(g, args.out)
    if args.rdf:
        write_turtle(g, args.rdf)
    return EXIT_OK


def cmd_sample(args):
    g = read_graph(args.graph)
    if not is_amp_cg(g):
        raise PreconditionError(f"{args.graph} is not an AMP chain graph")
    data = sample(parametrize(g, args.seed), args.n, args.seed)
    data.write_csv(sys.stdout if args.out == "-" else args.out)
    return EXIT_OK


def cmd_eval(args):
    truth = read_graph(args.truth)
    report = metrics(read_graph(args.learned), pattern(truth) if args.pattern else truth)
    data = report.to_dict()
    del data["query_count"]
    lines = [f"{k}: {v:.4f}" if isinstance(v, float) else f"{k}: {v}" for k, v in data.items()]
    _emit(args, data, lines)
    return EXIT_OK


def cmd_bench(args):
    cfg = BenchConfig.from_file(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    runs = benchmark(cfg, threads=args.threads, timings=args.timings)
    summary = summarize(runs)
    records = runs + summary_records(summary)
    if args.out == "-":
        write_jsonl(records, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            write_jsonl(records, f)
        logger.info("##### Saved benchmark report to: %s", args.out)
    if args.csv:
        write_csv(summary, args.csv)
    return EXIT_OK


def cmd_graph(args):
    g = read_graph(args.graph)
    comps = chain_components(g)
    data = {
        "vertices": len(g),
        "directed": len(g.directed_edges),
        "undirected": len(g.undirected_edges),
        "components": [g.sorted(c) for c in comps],
        "triplexes": len(triplexes(g)),
        "amp": is_amp_cg(g),
    }
    lines = [
        f"vertices: {data['vertices']}",
        f"edges: {g.edge_count()} ({data['directed']} directed, {data['undirected']} undirected)",
        "components: " + ",".join("{" + ",".join(c) + "}" for c in data["components"]),
        f"triplexes: {data['triplexes']}",
        f"amp: {str(data['amp']).lower()}",
    ]
    if args.rdf:
        write_turtle(g, args.rdf)
    _emit(args, data, lines)
    return EXIT_OK


COMMANDS = {
    "minsep": cmd_minsep,
    "learn": cmd_learn,
    "gen": cmd_gen,
    "sample": cmd_sample,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "graph": cmd_graph,
}


def run(argv=None):
    """Parse ``argv``, run the subcommand and map errors to exit codes."""
    try:
        args = define_args().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"ampcg: error: {e}\n")
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK

    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        sys.stderr.write(f"ampcg: error: {e}\n")
        return EXIT_USAGE
    except InputFormatError as e:
        sys.stderr.write(f"ampcg: {e}\n")
        return EXIT_INPUT
    except PreconditionError as e:
        sys.stderr.write(f"ampcg: {e}\n")
        return EXIT_PRECONDITION
    except AMPCGError as e:
        sys.stderr.write(f"ampcg: {e}\n")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
