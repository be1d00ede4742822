import argparse
import logging
import os
import sys

from .cli import PRESETS, main


def _model_arguments(parser: argparse.ArgumentParser, file_allowed: bool = True) -> None:
    if file_allowed:
        parser.add_argument('model', nargs='?', help='Model document (JSON); omit when using --preset')
    parser.add_argument('--preset', choices=PRESETS, help='Built-in channel model')
    parser.add_argument('--pi', help='Input chain [[1-p, p], [1, 0]] with p given as "num/den"')
    parser.add_argument('--pi00', help='P(0 -> 0) of the input chain, e.g. "1/3"')
    parser.add_argument('--pi11', help='P(1 -> 1) of the input chain, e.g. "1/2"')
    parser.add_argument('--q0', help='Gilbert-Elliott: probability of channel state 0')
    parser.add_argument('--kappa', help='Gilbert-Elliott: crossover ratio of state 1 to state 0')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmm-entropy",
        description="Asymptotic expansion of hidden Markov entropy rates around weak Black Holes"
    )
    parser.add_argument('--replay', metavar='MANIFEST', help='Re-run a manifest and compare outputs')
    parser.add_argument('--threads', type=int, help='Worker cap for tree traversal (HMM_ENTROPY_THREADS)')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')

    sub = parser.add_subparsers(dest='command')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', help='Write the result document here instead of stdout')
    common.add_argument('--manifest', help='Run manifest path (default: next to --output)')

    detect = sub.add_parser('detect', parents=[common], help='Classify Delta(0) and check normality')
    _model_arguments(detect)

    for name, text in (('expand', 'Expansion coefficients of H(Z)'),
                       ('bounds', 'Raw Birch upper and lower bound series')):
        p = sub.add_parser(name, parents=[common], help=text)
        _model_arguments(p)
        p.add_argument('--k', type=int, default=0, help='Expansion order')
        p.add_argument('--n', type=int, help='Horizon (default 6k+6)')
        if name == 'expand':
            p.add_argument('--verify', action='store_true', help='Require upper/lower bound agreement')

    compare = sub.add_parser('compare', parents=[common], help='Expansion against numeric oracles')
    _model_arguments(compare)
    compare.add_argument('--k', type=int, default=0)
    compare.add_argument('--n', type=int, help='Horizon of the exact oracle (default 6k+6)')
    compare.add_argument('--eps', type=float, nargs='+', default=[1e-3, 1e-4])
    compare.add_argument('--samples', type=int, default=0, help='Monte Carlo path length (0 skips it)')
    compare.add_argument('--seed', type=int, default=0)
    compare.add_argument('--burnin', type=int, default=1000)
    compare.add_argument('--csv', help='Also write the table as CSV')

    mc = sub.add_parser('mc', parents=[common], help='Monte Carlo entropy rate at one eps')
    _model_arguments(mc)
    mc.add_argument('--eps', type=float, nargs=1, default=[1e-2])
    mc.add_argument('--samples', type=int, default=10 ** 6)
    mc.add_argument('--seed', type=int, default=0)
    mc.add_argument('--burnin', type=int, default=1000)

    emit = sub.add_parser('emit-model', parents=[common], help='Write a preset as a model document')
    _model_arguments(emit, file_allowed=False)
    return parser


def cli():
    """Command line interface."""
    parser = build_parser()
    args = parser.parse_args()

    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(name)s %(levelname)s: %(message)s")

    # Workers read the cap from the environment, like every other setting
    if args.threads:
        os.environ["HMM_ENTROPY_THREADS"] = str(args.threads)

    if not args.replay and not args.command:
        parser.print_help()
        sys.exit(2)

    sys.exit(main(args))

if __name__ == "__main__":
    cli()
