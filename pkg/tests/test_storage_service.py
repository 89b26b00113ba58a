import pytest

from arfima_misspec.exceptions import IoError
from arfima_misspec.models.arfima import EtaVector
from arfima_misspec.services.storage_service import (
    delete_output,
    init_output_dir,
    list_outputs,
    load_csv,
    save_csv,
    save_json,
)


def test_csv_keeps_full_precision(tmp_path):
    path = save_csv(["a", "b"], [[0.1 + 0.2, 3]], str(tmp_path / "t.csv"))
    rows = load_csv(path)
    assert rows[0] == ["a", "b"]
    assert float(rows[1][0]) == 0.1 + 0.2
    assert rows[1][1] == "3"


def test_nested_directories_are_created(tmp_path):
    target = tmp_path / "a" / "b" / "eta.json"
    save_json(EtaVector(d=0.1, beta=(0.2,)), str(target))
    assert EtaVector.model_validate_json(target.read_text()) == EtaVector(d=0.1, beta=(0.2,))


def test_list_and_delete(tmp_path):
    directory = init_output_dir(str(tmp_path / "out"))
    save_csv(["x"], [[1.0]], f"{directory}/b.csv")
    save_csv(["x"], [[1.0]], f"{directory}/a.csv")
    save_json(EtaVector(d=0.0), f"{directory}/c.json")
    assert list_outputs(directory) == ["a.csv", "b.csv", "c.json"]
    assert list_outputs(directory, suffix=".csv") == ["a.csv", "b.csv"]
    assert delete_output(f"{directory}/a.csv")
    assert not delete_output(f"{directory}/a.csv")
    assert list_outputs(directory, suffix=".csv") == ["b.csv"]


def test_missing_directory_lists_nothing(tmp_path):
    assert list_outputs(str(tmp_path / "nowhere")) == []


def test_missing_file_raises(tmp_path):
    with pytest.raises(IoError):
        load_csv(str(tmp_path / "missing.csv"))
