"""
The pipeline from the command line
==================================

The same steps through the ``occlabel`` entry point: synthesize, curate,
evaluate. Everything lands in a temporary directory.
"""

import tempfile
from pathlib import Path

from occlabel.cli import main
from occlabel.config import GridConfig, PipelineConfig, dumps

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg = PipelineConfig(seed=42, grid=GridConfig(dims=(100, 100, 16)))
    (tmp / "run.toml").write_text(dumps(cfg))
    common = ["--config", str(tmp / "run.toml")]

    main(["synth", *common, "--frames", "5", "--ground", "slope", "--grade", "0.06", "--out", str(tmp / "scene")])
    main(["curate", *common, "--input", str(tmp / "scene"), "--out", str(tmp / "labels")])
    for p in sorted((tmp / "labels").iterdir()):
        print(p.name, p.stat().st_size, "bytes")

    # the synth ground truth ignores occlusion, so recall is low and precision high
    main(["eval", "--pred", str(tmp / "labels" / "frame_000002.ocv"), "--gt", str(tmp / "scene" / "gt" / "frame_000002.ocv")])
