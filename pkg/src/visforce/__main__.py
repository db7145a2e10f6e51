# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

import sys

from visforce.cli import main

sys.exit(main())
