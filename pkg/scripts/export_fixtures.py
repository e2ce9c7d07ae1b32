"""Export every registered model as a standalone JSON file under fixtures/."""

import json
from pathlib import Path

from phi4forms.pipeline import FixtureRegistry

OUT = Path(__file__).resolve().parents[1] / "fixtures"


def main() -> None:
    reg = FixtureRegistry.default()
    OUT.mkdir(exist_ok=True)
    for name in reg.names():
        model = reg.model(name)
        obj = model.to_json() | {"provenance": reg.provenance(name)}
        (OUT / f"{name}.json").write_text(json.dumps(obj, indent=1) + "\n")
    print(f"wrote {len(reg.names())} models to {OUT}")


if __name__ == "__main__":
    main()
