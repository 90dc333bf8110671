#!/usr/bin/env python3
"""
Remove report bundles under the configured reports root.
Network and scenario files are left untouched.
"""

import shutil
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from qtomo.config import settings
from qtomo.logging_config import logger


def clean_reports(confirm: bool = False) -> int:
    """Delete every bundle directory; returns how many were removed."""
    root = settings.reports_root
    if not root.exists():
        print(f"Nothing to clean: {root} does not exist")
        return 0

    bundles = sorted(p for p in root.iterdir() if p.is_dir() and (p / "scenario.json").exists())
    if not bundles:
        print(f"No report bundles in {root}")
        return 0

    if not confirm:
        print(f"⚠️  WARNING: This will delete {len(bundles)} report bundles in {root}")
        response = input("Are you sure you want to continue? (yes/no): ")
        if response.lower() not in ['yes', 'y']:
            print("Cancelled.")
            return 0

    for bundle in bundles:
        logger.info(f"Removing bundle {bundle}")
        shutil.rmtree(bundle)
        print(f"  ✓ Removed {bundle.name}")

    print(f"\n✓ Removed {len(bundles)} bundles")
    return len(bundles)


if __name__ == "__main__":
    clean_reports(confirm="--yes" in sys.argv or "-y" in sys.argv)
