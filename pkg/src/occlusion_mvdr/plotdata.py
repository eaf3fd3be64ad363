"""Plot-ready series from a results CSV (grouped bars as data, no images).

One JSON file per VAD condition holds a panel per input SNR.  Each panel has,
for both measures, one series per strategy over the switch counts (mean and
std over utterances) and the nose-pad reference line for SNR improvement.
"""
import json
from pathlib import Path

from .experiment import read_results

__all__ = ['build_panels', 'emit_plotdata']

MEASURES = {'snr_improvement': ('snr_improvement_db', 'snr_improvement_db_std'),
            'ovd': ('ovd_db', 'ovd_db_std')}


def _ordered_unique(values):
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def build_panels(rows):
    """Group aggregate rows into {vad: {snr: panel}} dictionaries."""
    means = [r for r in rows if r['kind'] == 'mean']
    panels = {}
    for vad in _ordered_unique(r['vad'] for r in means):
        by_vad = [r for r in means if r['vad'] == vad]
        panels[vad] = {}
        for snr in _ordered_unique(r['snr_db'] for r in by_vad):
            cell = [r for r in by_vad if r['snr_db'] == snr]
            switches = sorted(_ordered_unique(r['switches'] for r in cell))
            panel = {'vad': vad, 'snr_db': snr, 'switches': switches,
                     'series': {}, 'nosepad_improvement_db': []}
            for name, (mean_key, std_key) in MEASURES.items():
                series = {}
                for strategy in _ordered_unique(r['strategy'] for r in cell):
                    pick = {r['switches']: r for r in cell
                            if r['strategy'] == strategy}
                    series[strategy] = {
                        'mean': [pick[s][mean_key] if s in pick else None
                                 for s in switches],
                        'std': [(pick[s][std_key] or 0.0) if s in pick
                                else None for s in switches]}
                panel['series'][name] = series
            for s in switches:
                ref = [r['nosepad_improvement_db'] for r in cell
                       if r['switches'] == s]
                panel['nosepad_improvement_db'].append(ref[0])
            panels[vad][snr] = panel
    return panels


def emit_plotdata(csv_path, out_dir):
    """Write ``plotdata_<vad>.json`` files; returns the written paths.

    An empty CSV (header only) produces a single ``plotdata.json`` with no
    panels.  Malformed input raises ValueError.
    """
    rows = read_results(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels = build_panels(rows)
    if not panels:
        path = out_dir / 'plotdata.json'
        path.write_text(json.dumps({'panels': []}, indent=1) + '\n')
        return [path]
    paths = []
    for vad, by_snr in panels.items():
        path = out_dir / f'plotdata_{vad}.json'
        doc = {'vad': vad, 'panels': list(by_snr.values())}
        path.write_text(json.dumps(doc, indent=1) + '\n')
        paths.append(path)
    return paths
