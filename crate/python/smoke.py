"""Smoke test for the xqmft_py extension.

Build with `cargo build -p xqmft-py --release`, then run
`python python/smoke.py target/release`. The directory argument should
contain libxqmft_py.so (it is linked as xqmft_py.so in a temp dir).
"""

import importlib.util
import os
import sys
import tempfile


def load(build_dir):
    for name in ("libxqmft_py.so", "libxqmft_py.dylib", "xqmft_py.pyd"):
        lib = os.path.join(build_dir, name)
        if os.path.exists(lib):
            break
    else:
        sys.exit(f"no extension library in {build_dir}")
    tmp = tempfile.mkdtemp()
    target = os.path.join(tmp, "xqmft_py.so")
    os.symlink(os.path.abspath(lib), target)
    spec = importlib.util.spec_from_file_location("xqmft_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    x = load(sys.argv[1] if len(sys.argv) > 1 else "target/release")

    doc = "<person><p_id><a/>person0</p_id><name>Jim</name><name>Li</name></person>"
    m = x.Mft.person()
    out, stats = m.stream(doc)
    assert out == "<out>JimLi</out>", out
    assert stats["peak_retained"] >= 0

    q = x.Query.corpus("person")
    compiled = q.compile()
    assert compiled.state_count() == 14
    forest = x.Forest.from_xml(doc)
    assert compiled.optimize().evaluate(forest) == q.interpret(forest)

    q02 = x.Query.corpus("q02").compile().optimize()
    assert q02.classify() == "FT" and q02.param_count() == 0
    small = q02.measure("xmark-lite", 2000)
    assert small["peak_retained"] == q02.measure("xmark-lite", 20000)["peak_retained"]

    ident = x.Mft("q(%t(x1)x2) -> %t(q(x1)) q(x2)\nq(eps) -> eps")
    composed, report = x.compose(ident, ident, "tt-tt")
    assert report["size"] <= 2 * report["bound"]
    gen = x.generate("xmark-lite", 300, 1)
    assert composed.evaluate(x.Forest.from_xml(gen)) == x.Forest.from_xml(gen)

    try:
        x.Query("<r>{$nope/a}</r>").compile()
    except ValueError:
        pass
    else:
        raise AssertionError("unscoped variable accepted")

    print("smoke ok:", len(x.QUERIES), "corpus queries")


if __name__ == "__main__":
    main()
