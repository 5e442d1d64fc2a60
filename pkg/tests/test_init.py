"""Tests for historyforge/__init__.py"""

import unittest
from historyforge import __version__


class TestInit(unittest.TestCase):
    def test_version_is_string(self):
        self.assertIsInstance(__version__, str)

    def test_version_is_semantic(self):
        self.assertEqual(len(__version__.split(".")), 3)


if __name__ == "__main__":
    unittest.main()
