"""Command line interface: simulate, enhance, evaluate, plotdata."""
import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .beamform import STRATEGIES, DivergenceError
from .config import OUTDIR_ENV, default_out_dir, load_config
from .detect import read_flags_csv
from .experiment import enhance, run_experiment, simulate
from .plotdata import emit_plotdata
from .speech import read_wav, write_wav

logger = logging.getLogger('occlusion_mvdr')


def _floats(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(',') if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None,
                        help="YAML config file, or 'default'")
    common.add_argument('--seed', type=int, default=None,
                        help='master seed (overrides the config)')
    common.add_argument('--out', default=None,
                        help=f'output directory (default: ${OUTDIR_ENV} '
                             f'or ./results)')
    common.add_argument('-v', '--verbose', action='store_true')

    parser = argparse.ArgumentParser(
        prog='occlusion-mvdr',
        description='Own-voice MVDR beamforming with an occludable mic.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common],
                       help='render one scene condition to WAV files')
    p.add_argument('--utterance', type=int, default=0,
                   help='index into the (speech x noise) utterance list')
    p.add_argument('--snr', type=float, default=None, help='input SNR in dB')
    p.add_argument('--switches', type=int, default=None,
                   help='occlusion state changes in the utterance')

    p = sub.add_parser('enhance', parents=[common],
                       help='enhance a multichannel WAV file')
    p.add_argument('input', help='noisy multichannel WAV (5 channels)')
    p.add_argument('--flags', required=True,
                   help='per-frame VAD/OD CSV (frame,vad,od)')
    p.add_argument('--strategy', choices=STRATEGIES, default='hybrid')
    p.add_argument('--side', choices=('left', 'right'), default='left')
    p.add_argument('--output', default=None,
                   help='output WAV (default: <out>/enhanced.wav)')
    p.add_argument('--weights', default=None,
                   help='optional .npz path for the weight log')
    p.add_argument('--pcm16', action='store_true',
                   help='write 16-bit PCM instead of float32')

    p = sub.add_parser('evaluate', parents=[common],
                       help='run the full condition grid')
    p.add_argument('--snr-grid', type=_floats, default=None,
                   help='comma separated input SNRs in dB')
    p.add_argument('--switch-grid', type=_ints, default=None,
                   help='comma separated switch counts')
    p.add_argument('--strategies', type=lambda s: s.split(','),
                   default=None)
    p.add_argument('--jobs', type=int, default=None)

    p = sub.add_parser('plotdata', parents=[common],
                       help='turn a results CSV into plot-ready JSON')
    p.add_argument('--csv', default=None,
                   help='results CSV (default: <out>/results.csv)')
    return parser


def _config(args, **extra):
    overrides = {'seed': args.seed, 'out_dir': args.out}
    overrides.update(extra)
    return load_config(args.config, overrides)


def _cmd_simulate(args):
    cfg = _config(args)
    out = simulate(cfg, cfg.out_dir, args.utterance, args.snr, args.switches)
    print(f'scene written to {out}')


def _cmd_enhance(args):
    cfg = _config(args)
    fs, noisy = read_wav(args.input)
    if fs != 16000:
        raise ValueError(f'{args.input}: sample rate {fs} Hz, expected 16000')
    flags = read_flags_csv(args.flags)
    t0 = time.perf_counter()
    out, result = enhance(noisy, flags, args.strategy, cfg, args.side)
    elapsed = time.perf_counter() - t0
    output = Path(args.output) if args.output else \
        Path(cfg.out_dir) / 'enhanced.wav'
    output.parent.mkdir(parents=True, exist_ok=True)
    write_wav(output, fs, out, pcm16=args.pcm16)
    if args.weights:
        np.savez_compressed(args.weights, weights=result.weights,
                            od=flags.od, vad=flags.vad)
    duration = noisy.shape[1] / fs
    print(f'{args.strategy}: {duration:.2f} s of audio in {elapsed:.2f} s '
          f'-> {output}')


def _cmd_evaluate(args):
    cfg = _config(args, snr_grid=args.snr_grid, switch_grid=args.switch_grid,
                  strategies=args.strategies, jobs=args.jobs)
    t0 = time.perf_counter()
    path = run_experiment(cfg)
    print(f'results written to {path} ({time.perf_counter() - t0:.1f} s)')


def _cmd_plotdata(args):
    out = Path(args.out if args.out else default_out_dir())
    csv_path = Path(args.csv) if args.csv else out / 'results.csv'
    if not csv_path.is_file():
        raise FileNotFoundError(f'results CSV not found: {csv_path}')
    for path in emit_plotdata(csv_path, out):
        print(path)


COMMANDS = {'simulate': _cmd_simulate, 'enhance': _cmd_enhance,
            'evaluate': _cmd_evaluate, 'plotdata': _cmd_plotdata}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else
                        logging.WARNING, format='%(levelname)s %(message)s')
    try:
        COMMANDS[args.command](args)
    except (OSError, ValueError, DivergenceError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
