import json
import math

from splitcgf.bound_chain import QuadBound, Trace, iterate_upper_quad, rational_lower_iterate, upper_envelope


def test_trace_chain_is_serializable():
    tr = Trace()
    q = QuadBound("upper", 0.5, 0.1, 1.0)
    out = tr.apply(iterate_upper_quad, q, 4)
    assert out == iterate_upper_quad(q, 4)
    tr.apply(upper_envelope, QuadBound("upper", 0.5, 0.1, 1.0, 1.0), 3)
    tr.apply(rational_lower_iterate, QuadBound("lower", 1.0, 1.0, 1.0, 0.5), 2)
    doc = json.loads(tr.to_json())
    nodes = doc["nodes"]
    assert [n["id"] for n in nodes] == [0, 1, 2]
    assert nodes[0]["rule"] == "quad-iterate-upper"
    assert nodes[0]["inputs"]["args"][0]["direction"] == "upper"
    assert nodes[1]["domain"]["lam_max"] == upper_envelope(QuadBound("upper", 0.5, 0.1, 1.0, 1.0), 3).lam_max
    assert nodes[2]["output"]["delta"] is None  # unrestricted
    assert nodes[2]["domain"]["lam_max"] == "inf"


def test_custom_rule_and_nonfinite_values():
    tr = Trace()
    tr.record("custom", {"x": math.nan}, {"y": -math.inf}, rule="by-hand")
    node = tr.to_dict()["nodes"][0]
    assert node["rule"] == "by-hand" and node["inputs"]["x"] is None and node["output"]["y"] == "-inf"
