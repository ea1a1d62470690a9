import os
import tempfile

# keep test runs from writing into the repo's logs/ directory
os.environ.setdefault("FRACKAC_LOG_DIR", os.path.join(tempfile.gettempdir(), "frackac-test-logs"))
