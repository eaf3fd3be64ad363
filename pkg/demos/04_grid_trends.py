"""
Trends over the evaluation grid
===============================

Runs a reduced grid (two utterances, two switch counts) and prints the mean
SNR improvement and own-voice distortion per strategy.  Pass ``full`` on the
command line for the full default grid (about five minutes).
"""
import sys
import tempfile

from occlusion_mvdr.config import load_config
from occlusion_mvdr.experiment import read_results, run_experiment

full = len(sys.argv) > 1 and sys.argv[1] == 'full'
overrides = {'out_dir': tempfile.mkdtemp(prefix='occlusion_mvdr_')}
if not full:
    overrides.update(speech=['synthetic:0'], switch_grid=[2, 48])
cfg = load_config('default', overrides)
rows = [r for r in read_results(run_experiment(cfg)) if r['kind'] == 'mean']

print(f'{"vad":7s}{"snr":>5s}{"sw":>4s}  '
      + ''.join(f'{s:>18s}' for s in cfg.strategies) + '   nose pad')
for vad in [v.name for v in cfg.vad_conditions]:
    for snr in cfg.snr_grid:
        for sw in cfg.switch_grid:
            cell = {r['strategy']: r for r in rows if r['vad'] == vad
                    and r['snr_db'] == snr and r['switches'] == sw}
            vals = ''.join(f'{cell[s]["snr_improvement_db"]:8.2f} /'
                           f'{cell[s]["ovd_db"]:7.2f}  '
                           for s in cfg.strategies)
            nose = next(iter(cell.values()))['nosepad_improvement_db']
            print(f'{vad:7s}{snr:5.0f}{sw:4d}  {vals}{nose:8.2f}')
print('columns: SNR improvement / OVD in dB;  results in', cfg.out_dir)
