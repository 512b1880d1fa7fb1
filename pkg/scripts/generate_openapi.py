#!/usr/bin/env python3
"""Write the service's OpenAPI description to docs/openapi.json."""

import json
from pathlib import Path

from ctrl4d.service import create_app


def main():
    app = create_app()
    out = Path(__file__).resolve().parent.parent / "docs" / "openapi.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(app.openapi(), indent=2), encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
