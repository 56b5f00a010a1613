# run_calibration.py
import sys
from dotenv import load_dotenv

from app import config
from app.calibration import calibrate, constants_path
from app.schemas.suite_payload import SuiteConfig

# Load environment variables
load_dotenv()
config.configure_logging("INFO")

# Default suite settings; pass s values as arguments, e.g. python run_calibration.py 0.7 0.75
s_values = [float(arg) for arg in sys.argv[1:]] or [0.75]
suite_config = SuiteConfig(s_values=s_values)
path = constants_path(suite_config)

print(f"🔧 Calibrating constants for s = {s_values}...")
constants = calibrate(suite_config, path)

for family, fitted in sorted(constants.constants.items()):
    print(f"  {family}: {fitted}")
print(f"✅ Constants written to {path}.")
