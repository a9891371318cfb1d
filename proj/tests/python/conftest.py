"""Makes `import resus` work against an uninstalled build tree.

When RESUS_MODULE_DIR points at the directory holding the compiled _resus
extension, a throwaway package is assembled from it and python/resus.
Otherwise the installed package is used.
"""

import os
import pathlib
import shutil
import sys
import tempfile

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
FIXTURES = pathlib.Path(os.environ.get("RESUS_FIXTURES", ROOT / "tests" / "fixtures"))

_module_dir = os.environ.get("RESUS_MODULE_DIR")
if _module_dir:
    _staging = pathlib.Path(tempfile.mkdtemp(prefix="resus-py-"))
    package = _staging / "resus"
    package.mkdir()
    shutil.copy(ROOT / "python" / "resus" / "__init__.py", package / "__init__.py")
    for ext in pathlib.Path(_module_dir).glob("_resus*"):
        (package / ext.name).symlink_to(ext)
    sys.path.insert(0, str(_staging))


@pytest.fixture
def fixtures():
    return FIXTURES
