import json
import math

import numpy as np
import pytest

from ergoplan.mission import Approach
from ergoplan.mission_io import (
    BadBox,
    MissingField,
    MissionFormatError,
    RegionOutsideWorkspace,
    TimeInconsistent,
    parse_mission,
    serialize_mission,
)

from conftest import box_around, make_mission


def valid_doc():
    return {
        "workspace": {"lo": [0, 0, 0], "hi": [8, 5, 3]},
        "obstacles": [{"lo": [3.6, 3.8, 0], "hi": [4.4, 4.6, 3]}],
        "operators": [
            {
                "box": {"lo": [4.4, 2.0, 0.9], "hi": [5.4, 3.0, 1.9]},
                "heading_rad": math.pi,
                "preferences": ["front"],
                "approach_depth": 2.0,
                "behind_depth": 2.0,
            }
        ],
        "refills": [{"lo": [4.4, 0.4, 0.9], "hi": [5.4, 1.2, 1.9]}],
        "depot": [4.0, 2.5, 1.4],
        "capacity": 1,
        "t_total": 23.0,
        "t_handover": 4.0,
        "t_refill": 2.0,
        "dt": 0.05,
        "limits": {"v_max": [1.1, 1.1, 1.1], "a_max": [1.1, 1.1, 1.1]},
    }


def parse(doc):
    return parse_mission(json.dumps(doc))


class TestParse:
    def test_valid_document(self):
        m = parse(valid_doc())
        assert m.capacity == 1
        assert m.operators[0].preferences == (Approach.FRONT,)
        assert m.operators[0].box.lo == (4.4, 2.0, 0.9)
        assert m.n_cells == 460
        assert np.allclose(m.depot, [4.0, 2.5, 1.4])

    def test_obstacles_default_empty(self):
        doc = valid_doc()
        del doc["obstacles"]
        assert parse(doc).obstacles == ()

    def test_invalid_json(self):
        with pytest.raises(MissionFormatError) as err:
            parse_mission("{not json")
        assert err.value.field == "$"

    def test_missing_field_names_path(self):
        doc = valid_doc()
        del doc["depot"]
        with pytest.raises(MissingField) as err:
            parse(doc)
        assert err.value.field == "depot"

    def test_nested_missing_field(self):
        doc = valid_doc()
        del doc["limits"]["v_max"]
        with pytest.raises(MissingField) as err:
            parse(doc)
        assert err.value.field == "limits.v_max"

    def test_reversed_box(self):
        doc = valid_doc()
        doc["refills"][0]["lo"], doc["refills"][0]["hi"] = (
            doc["refills"][0]["hi"],
            doc["refills"][0]["lo"],
        )
        with pytest.raises(BadBox) as err:
            parse(doc)
        assert err.value.field == "refills[0]"

    def test_operator_outside_workspace(self):
        doc = valid_doc()
        doc["operators"][0]["box"]["hi"] = [9.5, 3.0, 1.9]
        with pytest.raises(RegionOutsideWorkspace) as err:
            parse(doc)
        assert err.value.field == "operators[0].box"

    def test_depot_outside_workspace(self):
        doc = valid_doc()
        doc["depot"] = [-1.0, 2.5, 1.4]
        with pytest.raises(RegionOutsideWorkspace) as err:
            parse(doc)
        assert err.value.field == "depot"

    def test_operator_inside_obstacle(self):
        doc = valid_doc()
        doc["obstacles"].append({"lo": [4.0, 1.8, 0.7], "hi": [5.6, 3.2, 2.1]})
        with pytest.raises(MissionFormatError) as err:
            parse(doc)
        assert err.value.field == "operators[0].box"
        assert "obstacles[1]" in str(err.value)

    def test_behind_is_not_an_approach(self):
        doc = valid_doc()
        doc["operators"][0]["preferences"] = ["behind"]
        with pytest.raises(MissionFormatError) as err:
            parse(doc)
        assert err.value.field == "operators[0].preferences[0]"

    def test_unknown_approach(self):
        doc = valid_doc()
        doc["operators"][0]["preferences"] = ["sideways"]
        with pytest.raises(MissionFormatError):
            parse(doc)

    def test_heading_out_of_range(self):
        doc = valid_doc()
        doc["operators"][0]["heading_rad"] = 4.0
        with pytest.raises(MissionFormatError) as err:
            parse(doc)
        assert err.value.field == "operators[0].heading_rad"

    def test_capacity_must_be_integer(self):
        doc = valid_doc()
        doc["capacity"] = 1.5
        with pytest.raises(MissionFormatError) as err:
            parse(doc)
        assert err.value.field == "capacity"

    def test_boolean_capacity_rejected(self):
        doc = valid_doc()
        doc["capacity"] = True
        with pytest.raises(MissionFormatError):
            parse(doc)

    def test_horizon_off_grid(self):
        doc = valid_doc()
        doc["t_total"] = 23.013
        with pytest.raises(TimeInconsistent) as err:
            parse(doc)
        assert err.value.field == "t_total"

    def test_dwell_exceeding_horizon(self):
        doc = valid_doc()
        doc["t_handover"] = 30.0
        with pytest.raises(TimeInconsistent) as err:
            parse(doc)
        assert err.value.field == "t_handover"

    def test_nonpositive_dt(self):
        doc = valid_doc()
        doc["dt"] = 0.0
        with pytest.raises(TimeInconsistent) as err:
            parse(doc)
        assert err.value.field == "dt"

    def test_nonpositive_limits(self):
        doc = valid_doc()
        doc["limits"]["a_max"] = [1.1, 0.0, 1.1]
        with pytest.raises(MissionFormatError) as err:
            parse(doc)
        assert err.value.field == "limits"

    def test_errors_are_value_errors(self):
        assert issubclass(MissionFormatError, ValueError)


class TestRoundTrip:
    def test_serialize_then_parse_is_identity(self):
        m = make_mission(
            [(2, 0, 1), (4, 1, 1)],
            [(3, 3, 1)],
            depot=(0, 0, 1),
            capacity=2,
            headings=[0.3, -2.0],
            prefs=[("front", "above"), ("left",)],
            obstacles=(box_around((-5, -5, 2), 0.5),),
        )
        text = serialize_mission(m)
        again = parse_mission(text)
        assert serialize_mission(again) == text
        assert again.capacity == m.capacity
        assert again.operators[0].preferences == m.operators[0].preferences
        assert again.operators[1].heading_rad == m.operators[1].heading_rad
        assert again.workspace.lo == m.workspace.lo
        assert np.array_equal(again.depot, m.depot)
        assert again.t_total == m.t_total and again.dt == m.dt

    def test_serialized_form_is_stable_json(self):
        m = make_mission([(2, 0, 1)], [(3, 3, 1)], depot=(0, 0, 1))
        text = serialize_mission(m)
        assert text.endswith("\n")
        doc = json.loads(text)
        assert set(doc) == {
            "workspace",
            "obstacles",
            "operators",
            "refills",
            "depot",
            "capacity",
            "t_total",
            "t_handover",
            "t_refill",
            "dt",
            "limits",
        }
