# mixedls test suite
