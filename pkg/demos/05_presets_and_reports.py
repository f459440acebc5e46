"""
Threshold presets and machine-readable reports
==============================================
"""

# %%
import json
import tempfile
from pathlib import Path

from spateval import PRESETS, emit_report, evaluate, preset_config, validate_inputs
from spateval.synthetic import random_scene

for name, rows in PRESETS.items():
    print(name, {cls: tau for cls, tau in rows})

# %%
# Evaluate random predictions against the DALES class list and write JSON.
config = preset_config("dales")
cloud, preds, _ = random_scene(20_000, config.n_classes, seed=2, extent=200.0)
report = evaluate(validate_inputs(cloud, preds, config.thresholds, config.class_names))

out = Path(tempfile.mkdtemp()) / "report.json"
emit_report(report, out, "json", config_echo=config.echo())
doc = json.loads(out.read_text())
print(json.dumps(doc["scopes"][0]["per_model"]["model0"]["distance"]["per_class"]["ground"], indent=2))
