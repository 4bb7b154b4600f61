"""Import control and class selection, exercised in-process.

These are unit tests against load_candidate; the same behavior through the
pipe is covered by the protocol and serve suites.
"""

import pytest

from conftest import candidate_code

from efa_guest_runner.guestns import BaseModel
from efa_guest_runner.loading import GuestError, load_candidate

LISTING_CLASSES = {
    "algebra_pow10": "MATH_train_5862",
    "precalc_inverse_matrix": "MATH_train_7423",
    "numtheory_congruence": "MATH_train_5095",
    "geometry_cylinder": "MATH_train_2738",
    "probability_point_rect": "MATH_train_2221",
}


def wrap(body: str, name: str = "Prob") -> str:
    return f"""class {name}(BaseModel):
    x: int

    @classmethod
    def original(cls) -> 'Self':
        return cls(x=1)

    @classmethod
    def sample(cls) -> 'Self':
        return cls(x=random.randint(1, 9))

    def render(self) -> str:
        return f'What is {{self.x}}?'

    def solve(self) -> str:
        {body}
"""


class TestSelection:
    @pytest.mark.parametrize("name, class_name", sorted(LISTING_CLASSES.items()))
    def test_listings_load_clean(self, name, class_name):
        loaded = load_candidate(candidate_code(name))
        assert loaded.class_name == class_name
        assert loaded.load_diagnostics == []

    def test_last_qualifying_class_wins(self):
        code = wrap("return str(self.x)", "First") + "\n" + wrap(
            "return str(self.x * 2)", "Second"
        )
        assert load_candidate(code).class_name == "Second"

    def test_incomplete_class_does_not_qualify(self):
        complete = wrap("return str(self.x)", "Whole")
        partial = "class Partial(BaseModel):\n    def render(self):\n        return ''\n"
        assert load_candidate(complete + "\n" + partial).class_name == "Whole"

    def test_methods_must_be_callable(self):
        code = wrap("return str(self.x)", "Shadowed") + "\nShadowed.solve = 'nope'\n"
        with pytest.raises(GuestError) as err:
            load_candidate(code)
        assert err.value.kind == "runtime"

    def test_no_qualifying_class(self):
        with pytest.raises(GuestError) as err:
            load_candidate("def orphan():\n    return 1\n")
        assert err.value.kind == "runtime"
        assert "four required methods" in err.value.message

    def test_syntax_error(self):
        with pytest.raises(GuestError) as err:
            load_candidate("class Broken(BaseModel:\n    pass\n")
        assert err.value.kind == "syntax"

    def test_module_level_raise_keeps_candidate_frames_only(self):
        code = "raise ValueError('boom at import time')\n" + wrap("return '1'")
        with pytest.raises(GuestError) as err:
            load_candidate(code)
        assert err.value.kind == "runtime"
        assert err.value.message == "ValueError: boom at import time"
        assert '"<candidate>"' in err.value.tb
        assert "site-packages" not in err.value.tb


class TestImportStripping:
    @pytest.mark.parametrize(
        "statement",
        [
            "import math",
            "import random",
            "import numpy as np",
            "import sympy",
            "import numpy",
            "from pydantic import BaseModel",
            "from typing import Self",
            "from math import sqrt",
            "from numpy.linalg import det",
            "import numpy.linalg as la",
        ],
    )
    def test_redundant_imports_load_with_a_warning(self, statement):
        loaded = load_candidate(statement + "\n\n" + wrap("return str(self.x)"))
        assert len(loaded.load_diagnostics) == 1
        assert statement in loaded.load_diagnostics[0]
        assert loaded.load_diagnostics[0].startswith("line 1:")

    def test_stripped_from_import_still_binds_the_name(self):
        code = "from math import sqrt\n\n" + wrap("return str(int(sqrt(self.x * 0 + 9)))")
        loaded = load_candidate(code)
        assert loaded.class_object.original().solve() == "3"

    def test_reimported_basemodel_is_the_runner_basemodel(self):
        code = "from pydantic import BaseModel\n\n" + wrap("return str(self.x)")
        assert issubclass(load_candidate(code).class_object, BaseModel)

    def test_method_body_import_is_also_stripped(self):
        loaded = load_candidate(wrap("import math\n        return str(self.x)"))
        assert len(loaded.load_diagnostics) == 1
        assert loaded.class_object.original().solve() == "1"


class TestImportRejection:
    @pytest.mark.parametrize(
        "statement, named",
        [
            ("import socket", "socket"),
            ("import os", "os"),
            ("from os import path", "os"),
            ("import pydantic", "pydantic"),
            ("import typing", "typing"),
            ("from typing import List", "typing.List"),
            ("from pydantic import Field", "pydantic.Field"),
            ("from numpy import *", "numpy.*"),
            ("from math import nosuchname", "math.nosuchname"),
            ("import numpy.nosuchmodule as nn", "numpy.nosuchmodule"),
        ],
    )
    def test_unsatisfiable_imports_fail_the_load(self, statement, named):
        with pytest.raises(GuestError) as err:
            load_candidate(statement + "\n\n" + wrap("return str(self.x)"))
        assert err.value.kind == "runtime"
        assert f"import of {named!r} is not allowed" in err.value.message

    def test_rejection_happens_before_any_execution(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code = "SIDE_EFFECT = open('pwned', 'w')\nimport socket\n" + wrap("return '1'")
        with pytest.raises(GuestError):
            load_candidate(code)
        assert not (tmp_path / "pwned").exists()

    def test_method_body_socket_import_is_rejected_at_load(self):
        with pytest.raises(GuestError) as err:
            load_candidate(candidate_code("socket_open"))
        assert err.value.kind == "runtime"
        assert "socket" in err.value.message

    def test_relative_import_is_rejected(self):
        with pytest.raises(GuestError):
            load_candidate("from . import helpers\n" + wrap("return '1'"))
