import json

import pytest

from oracles import slot_set
from slotaug.slot_db import (SlotDatabase, build_slot_database, query,
                             read_slot_database, write_slot_database)
from synth import coco_dict, dataset_from, random_coco


def one_image(boxes, cats=None, crowd=()):
    cats = cats or [1] * len(boxes)
    anns = [{"id": i + 1, "image_id": 1, "category_id": c, "bbox": b,
             "area": b[2] * b[3], "iscrowd": int(i in crowd)}
            for i, (b, c) in enumerate(zip(boxes, cats))]
    return dataset_from(coco_dict(
        [{"id": 1, "file_name": "a.png", "width": 100, "height": 100}], anns,
        [{"id": 1, "name": "car", "supercategory": "vehicle"},
         {"id": 2, "name": "bus", "supercategory": "vehicle"}]))


def test_single_slot_attributes(backend):
    db = build_slot_database(one_image([[10, 20, 30, 40]]))
    (s,) = db.slots
    assert (s.width, s.height, s.area, s.aspect_ratio) == (30, 40, 1200, 0.75)
    assert s.bbox.as_tuple() == (10, 20, 40, 60)


def test_all_overlapping_image_gives_no_slots(backend):
    db = build_slot_database(one_image([[0, 0, 10, 10], [5, 5, 10, 10], [8, 0, 10, 10]]))
    assert len(db) == 0


def test_three_image_fixture_matches_hand_list(backend):
    coco = coco_dict(
        [{"id": i, "file_name": f"{i}.png", "width": 100, "height": 100} for i in (1, 2, 3)],
        [
            # image 1: a and b overlap, c alone
            {"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 10, 10]},
            {"id": 2, "image_id": 1, "category_id": 1, "bbox": [5, 5, 10, 10]},
            {"id": 3, "image_id": 1, "category_id": 2, "bbox": [50, 50, 10, 10]},
            # image 2: touching edges only -> both isolated
            {"id": 4, "image_id": 2, "category_id": 1, "bbox": [0, 0, 10, 10]},
            {"id": 5, "image_id": 2, "category_id": 2, "bbox": [10, 0, 10, 10]},
            # image 3: crowd box blocks its neighbour and is not a slot itself
            {"id": 6, "image_id": 3, "category_id": 1, "bbox": [0, 0, 30, 30], "iscrowd": 1},
            {"id": 7, "image_id": 3, "category_id": 1, "bbox": [20, 20, 10, 10]},
            {"id": 8, "image_id": 3, "category_id": 2, "bbox": [70, 70, 5, 5]},
        ],
        [{"id": 1, "name": "car", "supercategory": "vehicle"},
         {"id": 2, "name": "bus", "supercategory": "vehicle"}])
    ds = dataset_from(coco)
    db = build_slot_database(ds)
    assert [s.instance_id for s in db.slots] == [3, 4, 5, 8]
    assert slot_set(ds) == [3, 4, 5, 8]
    assert set(db.by_image) == {1, 2, 3}
    assert [s.instance_id for s in db.by_category[2]] == [3, 5, 8]


@pytest.mark.parametrize("seed", range(5))
def test_random_fixture_matches_oracle(seed, backend):
    ds = dataset_from(random_coco(seed, n_images=40))
    db = build_slot_database(ds)
    assert sorted(s.instance_id for s in db.slots) == slot_set(ds)
    for s in db.slots:
        assert s.width == s.bbox.x2 - s.bbox.x1 and s.height == s.bbox.y2 - s.bbox.y1
        assert s.area == s.width * s.height and s.aspect_ratio == s.width / s.height
    keys = [(s.image_id, s.instance_id) for s in db.slots]
    assert keys == sorted(keys)
    assert build_slot_database(ds) == db


def car_db():
    boxes = [[i * 12, 0, 10, 10] for i in range(5)] + [[0, 50, 10, 8], [20, 50, 40, 20]]
    return build_slot_database(one_image(boxes, cats=[1] * 5 + [2, 2]))


def test_query_category_and_empty():
    db = car_db()
    assert len(query(db, category_id=1)) == 5
    assert query(db) == list(db.slots)
    assert len(query(db, supercategory="vehicle")) == 7
    assert query(db, supercategory="animal") == []


def test_query_area_band():
    db = car_db()
    hits = query(db, area=(80, 120))
    assert {s.area for s in hits} == {100, 80}
    assert all(s.area != 800 for s in hits)


def test_query_area_band_arithmetic():
    db = build_slot_database(one_image([[0, 0, 30, 40], [50, 50, 20, 40]]))
    areas = [s.area for s in query(db, area=(960, 1440))]
    assert areas == [1200]


def test_query_inverted_range():
    with pytest.raises(ValueError):
        query(car_db(), area=(10, 5))
    with pytest.raises(ValueError):
        query(car_db(), aspect_ratio=(2, 1))


def test_query_monotone():
    db = car_db()
    base = query(db, category_id=1)
    tighter = query(db, category_id=1, aspect_ratio=(0.9, 1.1), exclude_image_ids=[2])
    assert set(s.instance_id for s in tighter) <= set(s.instance_id for s in base)


def test_sidecar_round_trip(tmp_path):
    ds = dataset_from(random_coco(7, n_images=25))
    db = build_slot_database(ds)
    write_slot_database(db, tmp_path / "slots.json")
    records = json.loads((tmp_path / "slots.json").read_text())
    assert list(records[0]) == ["instance_id", "image_id", "category_id", "bbox",
                                "width", "height", "area", "aspect_ratio"]
    assert read_slot_database(tmp_path / "slots.json", ds.categories) == db


def test_empty_database():
    db = SlotDatabase([], {})
    assert len(db) == 0 and query(db) == []
