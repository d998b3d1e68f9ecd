import logging

import numpy as np
import pytest

from data.ingest import (
    CourseCatalog,
    IngestPaths,
    course_features,
    ingest,
    load_footprints,
    load_grades,
    load_profiles,
)
from data.records import GradeRecord
from errors import DataError, EmptyInputError, MalformedRowError
from models import IngestConfig

GRADES = """student_id,semester_index,course_id,credit,grade
s1,1,math,3,80
s1,1,art,3,50
s1,2,math,3,90
s1,2,bio,2,70
s2,1,math,3,60
s2,2,math,3,40
s2,2,art,3,85
s3,2,bio,2,65
s3,2,math,3,75
s4,1,art,3,70
s4,2,art,3,55
s5,1,bio,2,90
s5,2,bio,2,95
s5,2,chem,1,88
s6,1,math,3,70
"""

FOOTPRINTS = """student_id,timestamp,kind
s2,2017-02-22 15:21:54,library_entry
s1,2017-02-20 19:30:00,dormitory_entry
s1,2017-01-01 10:00:00,library_entry
s3,2017-03-01 09:10:00,library_entry
"""

PROFILES = """student_id,gender,department
s1,f,physics
s2,m,physics
s3,f,history
s4,m,history
"""

BORROWS = """student_id,semester_index,count
s1,1,3
s1,2,12
s4,2,2
"""


@pytest.fixture
def csv_paths(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def make(grades=GRADES, footprints=FOOTPRINTS, profiles=PROFILES, borrows=BORROWS):
        return IngestPaths(
            footprints=write("footprints.csv", footprints),
            profiles=write("profiles.csv", profiles),
            grades=write("grades.csv", grades),
            borrows=write("borrows.csv", borrows),
        )
    return make


@pytest.fixture
def ingest_config():
    return IngestConfig(borrow_cap=10, validation_fraction=0.0, test_fraction=0.2, seed=1)


def test_labels_and_histories(csv_paths, ingest_config):
    dataset = ingest(csv_paths(), ingest_config)

    assert sorted(s.student_id for s in dataset.samples) == ["s1", "s2", "s3", "s4", "s5"]
    assert dataset.metadata["target_semester"] == 2
    assert dataset.metadata["skipped_students"] == 1

    s1 = dataset.by_ids(["s1"])[0]
    assert s1.raw_labels.tolist() == pytest.approx([82.0, 10.0, 0.0])
    assert [h.tolist() for h in s1.raw_histories] == [[65.0], [3.0], [1.0]]

    s3 = dataset.by_ids(["s3"])[0]
    assert all(h.size == 0 for h in s3.raw_histories)
    assert s3.history_length == 0

    s5 = dataset.by_ids(["s5"])[0]
    assert s5.raw_labels[1] == 0.0
    assert np.all(s5.profile == 0.0)

    assert dataset.days == 63
    assert dataset.behavior_dims == [16, 6]
    assert dataset.course_dims == [7, 0, 8]
    assert sum(1 for s in dataset.samples if s.split == "test") == 1


def test_course_features_use_historical_takers():
    grades = [
        GradeRecord("s1", 1, "math", 3, 80), GradeRecord("s2", 1, "math", 3, 60),
        GradeRecord("s6", 1, "math", 3, 70), GradeRecord("s5", 1, "bio", 2, 90),
        GradeRecord("s1", 2, "math", 3, 10),
    ]
    catalog = CourseCatalog(grades, target_semester=2, pass_mark=60)
    current = [GradeRecord("s1", 2, "math", 3, 90), GradeRecord("s1", 2, "bio", 2, 70)]

    v1, v3 = course_features(current, catalog)
    math = np.array([60, 80, 70, 65, 75, 70, np.sqrt(200 / 3)])
    bio = np.array([90, 90, 90, 90, 90, 90, 0])
    assert v1 == pytest.approx((3 * math + 2 * bio) / 5)
    assert v3.size == 8
    assert v3[0] == 0.0
    assert v3[1:] == pytest.approx((math + bio) / 2)


def test_course_without_history_uses_all_historical_grades():
    grades = [GradeRecord("s1", 1, "math", 3, 50), GradeRecord("s2", 1, "art", 3, 70)]
    catalog = CourseCatalog(grades, target_semester=2, pass_mark=60)
    stats, rate = catalog.features("chem")
    assert stats[0] == 50 and stats[1] == 70
    assert rate == 0.5
    with pytest.raises(EmptyInputError):
        course_features([], catalog)


def test_out_of_window_records_are_counted(csv_paths, ingest_config, caplog):
    with caplog.at_level(logging.WARNING):
        dataset = ingest(csv_paths(), ingest_config)
    assert dataset.metadata["dropped_footprints"] == 1
    assert "Dropped 1 footprint records" in caplog.text


@pytest.mark.parametrize("footprints", ["", "student_id,timestamp,kind\n"])
def test_empty_footprint_file_gives_zero_behaviors(csv_paths, ingest_config, footprints):
    dataset = ingest(csv_paths(footprints=footprints), ingest_config)
    assert len(dataset.samples) == 5
    for sample in dataset.samples:
        assert np.all(sample.behaviors[0] == 0.0)
        assert np.all(sample.behaviors[1] == 0.0)


def test_malformed_grade_names_line(csv_paths, ingest_config):
    grades = "student_id,semester_index,course_id,credit,grade\ns1,2,math,3,80\ns1,2,art,3,abc\n"
    with pytest.raises(MalformedRowError) as info:
        ingest(csv_paths(grades=grades), ingest_config)
    assert info.value.line_number == 3
    assert info.value.path.endswith("grades.csv")


def test_out_of_range_grade(tmp_path):
    path = tmp_path / "grades.csv"
    path.write_text("student_id,semester_index,course_id,credit,grade\ns1,1,math,3,101\n")
    with pytest.raises(MalformedRowError) as info:
        load_grades(path)
    assert info.value.line_number == 2


def test_extra_field_is_malformed(tmp_path):
    path = tmp_path / "grades.csv"
    path.write_text("student_id,semester_index,course_id,credit,grade\ns1,1,math,3,70\ns1,1,art,3,70,9\n")
    with pytest.raises(MalformedRowError) as info:
        load_grades(path)
    assert info.value.line_number == 3


def test_bad_footprints(tmp_path):
    path = tmp_path / "footprints.csv"
    path.write_text("student_id,timestamp,kind\ns1,2017-02-20 10:00:00,library_entry\ns1,yesterday,library_entry\n")
    with pytest.raises(MalformedRowError) as info:
        load_footprints(path)
    assert info.value.line_number == 3

    path.write_text("student_id,timestamp,kind\ns1,2017-02-20 10:00:00,canteen\n")
    with pytest.raises(MalformedRowError):
        load_footprints(path)


def test_missing_columns(tmp_path):
    path = tmp_path / "grades.csv"
    path.write_text("student_id,course_id,grade\ns1,math,70\n")
    with pytest.raises(MalformedRowError) as info:
        load_grades(path)
    assert info.value.line_number == 1


def test_duplicates(tmp_path):
    path = tmp_path / "grades.csv"
    path.write_text(
        "student_id,semester_index,course_id,credit,grade\ns1,1,math,3,70\ns1,1,math,3,70\n"
    )
    assert len(load_grades(path)) == 1

    path.write_text(
        "student_id,semester_index,course_id,credit,grade\ns1,1,math,3,70\ns1,1,math,3,75\n"
    )
    with pytest.raises(MalformedRowError):
        load_grades(path)

    profiles = tmp_path / "profiles.csv"
    profiles.write_text("student_id,gender\ns1,f\ns1,m\n")
    with pytest.raises(MalformedRowError):
        load_profiles(profiles)


def test_multiple_footprints_keep_their_multiplicity(tmp_path):
    path = tmp_path / "footprints.csv"
    path.write_text(
        "student_id,timestamp,kind\ns1,2017-02-20 10:00:00,library_entry\ns1,2017-02-20 10:00:00,library_entry\n"
    )
    assert len(load_footprints(path)) == 2


def test_missing_inputs(csv_paths, ingest_config, tmp_path):
    paths = csv_paths()
    paths.grades = tmp_path / "absent.csv"
    with pytest.raises(DataError):
        ingest(paths, ingest_config)

    with pytest.raises(EmptyInputError):
        ingest(csv_paths(grades="student_id,semester_index,course_id,credit,grade\n"), ingest_config)


def test_borrows_are_optional(csv_paths, ingest_config):
    paths = csv_paths()
    paths.borrows = None
    dataset = ingest(paths, ingest_config)
    assert all(s.raw_labels[1] == 0.0 for s in dataset.samples)


def test_bad_semester_start(csv_paths):
    with pytest.raises(DataError):
        ingest(csv_paths(), IngestConfig(semester_start="spring"))
