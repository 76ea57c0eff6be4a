"""Family-spec JSON files for the fixture catalog."""
