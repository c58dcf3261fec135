#!/usr/bin/env python3
"""Validates the CLI fixtures and golden documents against the published schemas."""
import json
import sys
from pathlib import Path

import jsonschema


def main(root):
    root = Path(root)
    docs = root / "docs"
    operator = json.loads((docs / "operator.schema.json").read_text())
    result = json.loads((docs / "result.schema.json").read_text())
    failures = 0
    checked = 0
    for schema, folder in ((operator, "tests/cli/fixtures"), (result, "tests/cli/golden")):
        for path in sorted((root / folder).glob("*.json")):
            checked += 1
            try:
                jsonschema.validate(json.loads(path.read_text()), schema)
            except jsonschema.ValidationError as e:
                failures += 1
                print(f"{path}: {e.message}")
    print(f"{checked} documents checked, {failures} invalid")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else "."))
