import unittest

from voluptuous import Coerce, Optional

from dicke_spectra.errors import InvalidParameters
from dicke_spectra.util.schema import Schema, validate_schema

schema = Schema(
    {
        "x": int,
        "y": str,
        Optional("gamma"): Coerce(float),
    }
)


class TestValidateSchema(unittest.TestCase):
    def test_valid(self):
        validate_schema(schema, {"x": 10, "y": "foo"}, "pfx")

    def test_returns_coerced_value(self):
        value = validate_schema(schema, {"x": 1, "y": "", "gamma": "0.5"}, "pfx")
        self.assertEqual(value["gamma"], 0.5)

    def test_invalid(self):
        with self.assertRaises(InvalidParameters) as context:
            validate_schema(schema, {"x": "not-int"}, "pfx")
        self.assertTrue(str(context.exception).startswith("pfx\n"))


class TestCheckSchema(unittest.TestCase):
    def test_schema(self):
        "Creating a schema applies identifier checks."
        with self.assertRaises(Exception):
            Schema({"camelCase": int})

    def test_kebab_case(self):
        "Keys must map onto command-line flag destinations."
        with self.assertRaises(Exception):
            Schema({"cutoff-limit": int})

    def test_extend_schema(self):
        "Extending a schema applies identifier checks."
        with self.assertRaises(Exception):
            Schema({"cutoff_limit": int}).extend({"camelCase": int})

    def test_extend_schema_twice(self):
        "Extending a schema twice applies identifier checks."
        with self.assertRaises(Exception):
            Schema({"omega": int}).extend({"omega0": int}).extend({"camelCase": int})

    def test_extend_keeps_class(self):
        extended = Schema({"omega": int}).extend({"omega0": int})
        self.assertIsInstance(extended, Schema)
        self.assertIs(extended["omega0"], int)
